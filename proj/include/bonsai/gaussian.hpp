#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bonsai/solid.hpp"
#include "bonsai/vec3.hpp"

namespace bonsai {

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    constexpr Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
    constexpr Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
    constexpr bool operator==(const Rgb&) const = default;
};

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    static constexpr Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
    static constexpr Mat3 scaled_identity(double s) { return {{s, 0, 0, 0, s, 0, 0, 0, s}}; }

    constexpr double operator()(int r, int c) const { return m[3 * r + c]; }
    constexpr double& operator()(int r, int c) { return m[3 * r + c]; }

    bool operator==(const Mat3&) const = default;
};

Mat3 operator*(const Mat3& a, const Mat3& b);
Vec3 operator*(const Mat3& a, const Vec3& v);
Mat3 transpose(const Mat3& a);

/// One 3D Gaussian: center, covariance, color, opacity in (0, 1].
struct Splat {
    Vec3 mu;
    Mat3 cov = Mat3::identity();
    Rgb color;
    double opacity = 1.0;
};

struct GaussianCloud {
    std::vector<Splat> splats;

    std::size_t size() const { return splats.size(); }
    bool empty() const { return splats.empty(); }
    Aabb bounds() const;
};

struct Palette {
    Rgb trunk{0.36, 0.25, 0.16};
    Rgb extremity{0.30, 0.55, 0.22};
};

/// One isotropic splat per sampled point: sigma is the mean distance to the
/// three nearest other points (lowest index on ties), color by label.
/// Throws TooFewPoints below 4 points.
GaussianCloud init_gaussians(const SurfaceCloud& cloud, double opacity, const Palette& palette);

/// exp(-1/2 x^T cov^-1 x) for x relative to the splat center. Throws
/// SingularCovariance when cov is not symmetric positive definite.
double eval_gaussian(const Splat& splat, const Vec3& x_rel);

/// A splat crossing a ray: its color, effective opacity alpha * G, and depth.
struct RaySample {
    Rgb color;
    double alpha = 0.0;
    double depth = 0.0;
};

struct Composite {
    Rgb color;
    double transmittance = 1.0;
    double weighted_depth = 0.0;  // sum of depth * alpha * T

    double coverage() const { return 1.0 - transmittance; }
};

/// Front-to-back compositing: C = sum_i c_i a_i prod_{j<i} (1 - a_j).
/// Samples must already be sorted nearest first.
Composite composite_ray(std::span<const RaySample> samples);

}  // namespace bonsai

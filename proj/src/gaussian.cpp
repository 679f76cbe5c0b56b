#include "bonsai/gaussian.hpp"

#include <cmath>

#include "bonsai/error.hpp"
#include "bonsai/spatial.hpp"

namespace bonsai {

Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
        }
    }
    return out;
}

Vec3 operator*(const Mat3& a, const Vec3& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z, a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

Mat3 transpose(const Mat3& a) {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out(r, c) = a(c, r);
        }
    }
    return out;
}

Aabb GaussianCloud::bounds() const {
    Aabb box;
    for (const auto& s : splats) {
        box.expand(s.mu);
    }
    return box;
}

GaussianCloud init_gaussians(const SurfaceCloud& cloud, double opacity, const Palette& palette) {
    if (cloud.size() < 4) {
        throw TooFewPoints("need at least 4 surface points to size gaussians (got " +
                           std::to_string(cloud.size()) + ")");
    }
    if (!(opacity > 0.0 && opacity <= 1.0)) {
        throw ValidationError("initial opacity must lie in (0, 1]");
    }
    const KdTree tree(cloud.points);
    GaussianCloud out;
    out.splats.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nn = tree.k_nearest(cloud.points[i], 3, i);
        double sigma = 0.0;
        for (const auto& n : nn) {
            sigma += std::sqrt(n.sq_distance);
        }
        sigma /= static_cast<double>(nn.size());
        // Coincident samples would give a singular covariance.
        sigma = std::fmax(sigma, 1e-9);
        Splat& s = out.splats[i];
        s.mu = cloud.points[i];
        s.cov = Mat3::scaled_identity(sigma * sigma);
        s.color = cloud.labels[i] == SurfaceLabel::extremity ? palette.extremity : palette.trunk;
        s.opacity = opacity;
    }
    return out;
}

double eval_gaussian(const Splat& splat, const Vec3& x_rel) {
    const Mat3& a = splat.cov;
    constexpr double kSymmetryTol = 1e-12;
    for (int r = 0; r < 3; ++r) {
        for (int c = r + 1; c < 3; ++c) {
            if (std::abs(a(r, c) - a(c, r)) > kSymmetryTol * (std::abs(a(r, c)) + std::abs(a(c, r)) + 1e-300)) {
                throw SingularCovariance("covariance is not symmetric");
            }
        }
    }
    // Cholesky a = L L^T; then x^T a^-1 x = |L^-1 x|^2.
    const double l00sq = a(0, 0);
    if (!(l00sq > 0.0)) {
        throw SingularCovariance("covariance is not positive definite");
    }
    const double l00 = std::sqrt(l00sq);
    const double l10 = a(1, 0) / l00;
    const double l20 = a(2, 0) / l00;
    const double l11sq = a(1, 1) - l10 * l10;
    if (!(l11sq > 0.0)) {
        throw SingularCovariance("covariance is not positive definite");
    }
    const double l11 = std::sqrt(l11sq);
    const double l21 = (a(2, 1) - l20 * l10) / l11;
    const double l22sq = a(2, 2) - l20 * l20 - l21 * l21;
    if (!(l22sq > 0.0)) {
        throw SingularCovariance("covariance is not positive definite");
    }
    const double l22 = std::sqrt(l22sq);
    const double y0 = x_rel.x / l00;
    const double y1 = (x_rel.y - l10 * y0) / l11;
    const double y2 = (x_rel.z - l20 * y0 - l21 * y1) / l22;
    return std::exp(-0.5 * (y0 * y0 + y1 * y1 + y2 * y2));
}

Composite composite_ray(std::span<const RaySample> samples) {
    Composite out;
    for (const RaySample& s : samples) {
        const double w = s.alpha * out.transmittance;
        out.color = out.color + s.color * w;
        out.weighted_depth += s.depth * w;
        out.transmittance *= 1.0 - s.alpha;
    }
    return out;
}

}  // namespace bonsai

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "bonsai/gaussian.hpp"
#include "bonsai/rng.hpp"
#include "bonsai/solid.hpp"
#include "bonsai/vec3.hpp"

namespace bonsai {

/// Pinhole camera with square pixels; image rows run top to bottom.
struct Camera {
    Vec3 eye;
    Vec3 target;
    Vec3 up{0.0, 0.0, 1.0};
    double vertical_fov = 40.0;  // degrees
    std::size_t width = 512;
    std::size_t height = 512;

    /// Throws ValidationError for eye == target, fov outside (0, 180),
    /// empty images or an up vector parallel to the view direction.
    void validate() const;
};

/// Orthonormal camera frame and intrinsics derived from a Camera.
struct CameraBasis {
    Vec3 eye;
    Vec3 right;
    Vec3 up;
    Vec3 forward;
    double focal = 1.0;  // pixels
    double cx = 0.0;
    double cy = 0.0;

    explicit CameraBasis(const Camera& cam);

    /// (right, up, forward) coordinates of a world point.
    Vec3 to_camera(const Vec3& p) const;
    /// Unnormalized ray direction through the center of pixel (px, py);
    /// its forward component is 1.
    Vec3 pixel_ray(std::size_t px, std::size_t py) const;
};

struct DepthImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> depth;  // row-major, +inf where nothing was hit

    DepthImage() = default;
    DepthImage(std::size_t w, std::size_t h)
        : width(w), height(h), depth(w * h, std::numeric_limits<double>::infinity()) {}
    double at(std::size_t x, std::size_t y) const { return depth[y * width + x]; }
};

struct ColorImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Rgb> pixels;  // row-major

    ColorImage() = default;
    ColorImage(std::size_t w, std::size_t h, Rgb fill = {}) : width(w), height(h), pixels(w * h, fill) {}
    const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Binary silhouette; row-major, 1 = foreground.
struct BinaryMask {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    BinaryMask() = default;
    BinaryMask(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h, 0) {}
    bool at(std::size_t x, std::size_t y) const { return pixels[y * width + x] != 0; }
};

/// Foreground wherever the depth image recorded a hit.
BinaryMask mask_from_depth(const DepthImage& depth);

struct RenderedView {
    ColorImage color;
    DepthImage depth;
};

struct RenderOptions {
    Rgb background{0.0, 0.0, 0.0};
    Rgb mesh_color{0.55, 0.42, 0.30};
    double min_coverage = 1e-4;  // gaussian pixels below this are background
};

/// Camera placement around a scene: distances uniform in
/// [lo, hi] * scene_radius, azimuth uniform in [0, 2pi), elevation uniform in
/// [-15, 45] degrees, all looking at `center`.
struct RigSettings {
    std::size_t views = 4;
    double distance_lo = 2.5;
    double distance_hi = 4.0;
    double vertical_fov = 40.0;
    std::size_t width = 512;
    std::size_t height = 512;
};

std::vector<Camera> default_camera_rig(const Vec3& center, double scene_radius, const RigSettings& rig, Rng& rng);

/// Gaussians are projected with the local affine (EWA) approximation of the
/// perspective map, cut at 3 sigma, depth-sorted per pixel (stable on splat
/// index) and composited front to back. Depth is the transmittance-weighted
/// expected distance from the eye to the splat centers.
std::vector<RenderedView> render_gaussians(const GaussianCloud& cloud, const std::vector<Camera>& cams,
                                           const RenderOptions& options = {});

/// z-buffered triangle rasterization; depth is the eye-to-hit distance along
/// each pixel's center ray. Triangles reaching behind the near plane are
/// skipped.
std::vector<RenderedView> render_mesh(const TubeMesh& mesh, const std::vector<Camera>& cams,
                                      const RenderOptions& options = {});

}  // namespace bonsai

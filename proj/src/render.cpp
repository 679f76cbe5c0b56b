#include "bonsai/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bonsai/error.hpp"
#include "bonsai/parallel.hpp"

namespace bonsai {

namespace {

constexpr double kNear = 1e-6;
constexpr double kScreenDilation = 0.3;   // pixels^2 added to projected covariances
constexpr double kCutoffSq = 9.0;         // 3 sigma footprint
constexpr double kSaturation = 1e-12;     // stop gathering once a ray is this opaque
constexpr std::size_t kTile = 16;

double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

struct ProjectedSplat {
    double sx = 0.0;
    double sy = 0.0;
    double conic_a = 0.0;  // inverse screen covariance [a b; b c]
    double conic_b = 0.0;
    double conic_c = 0.0;
    double depth = 0.0;
    long x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds
};

struct TileEntry {
    double depth;
    std::size_t index;
    bool operator<(const TileEntry& o) const { return depth < o.depth || (depth == o.depth && index < o.index); }
};

// Inclusive range of pixel indices whose centers lie within [lo, hi].
std::pair<long, long> pixel_span(double lo, double hi, std::size_t extent) {
    const long first = std::max(0L, static_cast<long>(std::ceil(lo - 0.5)));
    const long last = std::min(static_cast<long>(extent) - 1, static_cast<long>(std::floor(hi - 0.5)));
    return {first, last};
}

ProjectedSplat project_splat(const Splat& s, const CameraBasis& basis, const Camera& cam) {
    ProjectedSplat p;
    const Vec3 t = basis.to_camera(s.mu);
    if (t.z <= kNear) {
        return p;
    }
    const double f = basis.focal;
    p.sx = basis.cx + f * t.x / t.z;
    p.sy = basis.cy - f * t.y / t.z;
    p.depth = distance(s.mu, basis.eye);

    // World covariance into camera axes, then through the Jacobian of the
    // perspective map evaluated at the splat center.
    Mat3 w;
    for (int c = 0; c < 3; ++c) {
        w(0, c) = basis.right[c];
        w(1, c) = basis.up[c];
        w(2, c) = basis.forward[c];
    }
    const Mat3 cov_cam = w * s.cov * transpose(w);
    const double j00 = f / t.z;
    const double j02 = -f * t.x / (t.z * t.z);
    const double j11 = -f / t.z;
    const double j12 = f * t.y / (t.z * t.z);
    // rows of J: (j00, 0, j02) and (0, j11, j12)
    const Vec3 r0{j00, 0.0, j02};
    const Vec3 r1{0.0, j11, j12};
    const Vec3 cr0 = cov_cam * r0;
    const Vec3 cr1 = cov_cam * r1;
    const double a = dot(r0, cr0) + kScreenDilation;
    const double b = dot(r0, cr1);
    const double c = dot(r1, cr1) + kScreenDilation;
    const double det = a * c - b * b;
    if (!(det > 0.0)) {
        return p;
    }
    p.conic_a = c / det;
    p.conic_b = -b / det;
    p.conic_c = a / det;
    const double mid = 0.5 * (a + c);
    const double lambda_max = mid + std::sqrt(std::fmax(0.0, mid * mid - det));
    const double radius = 3.0 * std::sqrt(lambda_max);
    std::tie(p.x0, p.x1) = pixel_span(p.sx - radius, p.sx + radius, cam.width);
    std::tie(p.y0, p.y1) = pixel_span(p.sy - radius, p.sy + radius, cam.height);
    return p;
}

RenderedView render_gaussian_view(const GaussianCloud& cloud, const Camera& cam, const RenderOptions& options) {
    cam.validate();
    const CameraBasis basis(cam);
    RenderedView view{ColorImage(cam.width, cam.height, options.background), DepthImage(cam.width, cam.height)};

    std::vector<ProjectedSplat> projected(cloud.size());
    parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            projected[i] = project_splat(cloud.splats[i], basis, cam);
        }
    });

    const std::size_t tiles_x = (cam.width + kTile - 1) / kTile;
    const std::size_t tiles_y = (cam.height + kTile - 1) / kTile;
    std::vector<std::vector<TileEntry>> tiles(tiles_x * tiles_y);
    for (std::size_t i = 0; i < projected.size(); ++i) {
        const ProjectedSplat& p = projected[i];
        if (p.x1 < p.x0 || p.y1 < p.y0) {
            continue;
        }
        for (std::size_t ty = p.y0 / kTile; ty <= static_cast<std::size_t>(p.y1) / kTile; ++ty) {
            for (std::size_t tx = p.x0 / kTile; tx <= static_cast<std::size_t>(p.x1) / kTile; ++tx) {
                tiles[ty * tiles_x + tx].push_back({p.depth, i});
            }
        }
    }

    parallel_for(tiles.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<RaySample> samples;
        for (std::size_t t = begin; t < end; ++t) {
            auto& list = tiles[t];
            std::sort(list.begin(), list.end());
            const std::size_t tx = t % tiles_x;
            const std::size_t ty = t / tiles_x;
            for (std::size_t py = ty * kTile; py < std::min(cam.height, (ty + 1) * kTile); ++py) {
                for (std::size_t px = tx * kTile; px < std::min(cam.width, (tx + 1) * kTile); ++px) {
                    const double cx = static_cast<double>(px) + 0.5;
                    const double cy = static_cast<double>(py) + 0.5;
                    samples.clear();
                    double transmittance = 1.0;
                    for (const TileEntry& e : list) {
                        const ProjectedSplat& p = projected[e.index];
                        if (static_cast<long>(px) < p.x0 || static_cast<long>(px) > p.x1 ||
                            static_cast<long>(py) < p.y0 || static_cast<long>(py) > p.y1) {
                            continue;
                        }
                        const double dx = cx - p.sx;
                        const double dy = cy - p.sy;
                        const double m = p.conic_a * dx * dx + 2.0 * p.conic_b * dx * dy + p.conic_c * dy * dy;
                        if (m > kCutoffSq) {
                            continue;
                        }
                        const Splat& s = cloud.splats[e.index];
                        const double alpha = s.opacity * std::exp(-0.5 * m);
                        samples.push_back({s.color, alpha, p.depth});
                        transmittance *= 1.0 - alpha;
                        if (transmittance < kSaturation) {
                            break;
                        }
                    }
                    if (samples.empty()) {
                        continue;
                    }
                    const Composite comp = composite_ray(samples);
                    const std::size_t idx = py * cam.width + px;
                    view.color.pixels[idx] = comp.color + options.background * comp.transmittance;
                    if (comp.coverage() >= options.min_coverage) {
                        view.depth.depth[idx] = comp.weighted_depth / comp.coverage();
                    }
                }
            }
        }
    });
    return view;
}

struct ProjectedTriangle {
    double x[3];
    double y[3];
    double inv_z[3];
    double area = 0.0;
    long x0 = 0, x1 = -1, y0 = 0, y1 = -1;
    Vec3 normal;
};

double edge(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

RenderedView render_mesh_view(const TubeMesh& mesh, const Camera& cam, const RenderOptions& options) {
    cam.validate();
    const CameraBasis basis(cam);
    RenderedView view{ColorImage(cam.width, cam.height, options.background), DepthImage(cam.width, cam.height)};

    std::vector<ProjectedTriangle> tris(mesh.faces.size());
    parallel_for(mesh.faces.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t f = begin; f < end; ++f) {
            ProjectedTriangle& tri = tris[f];
            bool ok = true;
            for (int k = 0; k < 3; ++k) {
                const Vec3 t = basis.to_camera(mesh.vertices[mesh.faces[f][k]]);
                if (t.z <= kNear) {
                    ok = false;
                    break;
                }
                tri.x[k] = basis.cx + basis.focal * t.x / t.z;
                tri.y[k] = basis.cy - basis.focal * t.y / t.z;
                tri.inv_z[k] = 1.0 / t.z;
            }
            if (!ok) {
                continue;
            }
            tri.area = edge(tri.x[0], tri.y[0], tri.x[1], tri.y[1], tri.x[2], tri.y[2]);
            if (tri.area == 0.0 || !std::isfinite(tri.area)) {
                continue;
            }
            std::tie(tri.x0, tri.x1) = pixel_span(std::min({tri.x[0], tri.x[1], tri.x[2]}),
                                                  std::max({tri.x[0], tri.x[1], tri.x[2]}), cam.width);
            std::tie(tri.y0, tri.y1) = pixel_span(std::min({tri.y[0], tri.y[1], tri.y[2]}),
                                                  std::max({tri.y[0], tri.y[1], tri.y[2]}), cam.height);
            tri.normal = mesh.face_normal(f);
        }
    });

    const std::size_t bands = (cam.height + kTile - 1) / kTile;
    std::vector<std::vector<std::size_t>> band_tris(bands);
    for (std::size_t f = 0; f < tris.size(); ++f) {
        const ProjectedTriangle& tri = tris[f];
        if (tri.x1 < tri.x0 || tri.y1 < tri.y0) {
            continue;
        }
        for (std::size_t b = tri.y0 / kTile; b <= static_cast<std::size_t>(tri.y1) / kTile; ++b) {
            band_tris[b].push_back(f);
        }
    }

    parallel_for(bands, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            const long row_lo = static_cast<long>(b * kTile);
            const long row_hi = static_cast<long>(std::min(cam.height, (b + 1) * kTile)) - 1;
            for (const std::size_t f : band_tris[b]) {
                const ProjectedTriangle& tri = tris[f];
                for (long py = std::max(row_lo, tri.y0); py <= std::min(row_hi, tri.y1); ++py) {
                    for (long px = tri.x0; px <= tri.x1; ++px) {
                        const double cx = static_cast<double>(px) + 0.5;
                        const double cy = static_cast<double>(py) + 0.5;
                        double w0 = edge(tri.x[1], tri.y[1], tri.x[2], tri.y[2], cx, cy);
                        double w1 = edge(tri.x[2], tri.y[2], tri.x[0], tri.y[0], cx, cy);
                        double w2 = edge(tri.x[0], tri.y[0], tri.x[1], tri.y[1], cx, cy);
                        if (tri.area < 0.0) {
                            w0 = -w0;
                            w1 = -w1;
                            w2 = -w2;
                        }
                        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) {
                            continue;
                        }
                        const double sum = w0 + w1 + w2;
                        const double inv_z = (w0 * tri.inv_z[0] + w1 * tri.inv_z[1] + w2 * tri.inv_z[2]) / sum;
                        const Vec3 ray = basis.pixel_ray(static_cast<std::size_t>(px), static_cast<std::size_t>(py));
                        const double dist = norm(ray) / inv_z;
                        const std::size_t idx = static_cast<std::size_t>(py) * cam.width + static_cast<std::size_t>(px);
                        if (dist < view.depth.depth[idx]) {
                            view.depth.depth[idx] = dist;
                            const double facing = std::abs(dot(tri.normal, ray)) / norm(ray);
                            view.color.pixels[idx] = options.mesh_color * (0.25 + 0.75 * facing);
                        }
                    }
                }
            }
        }
    });
    return view;
}

}  // namespace

BinaryMask mask_from_depth(const DepthImage& depth) {
    BinaryMask mask(depth.width, depth.height);
    for (std::size_t i = 0; i < depth.depth.size(); ++i) {
        mask.pixels[i] = std::isfinite(depth.depth[i]) ? 1 : 0;
    }
    return mask;
}

void Camera::validate() const {
    if (eye == target) {
        throw ValidationError("camera eye and target coincide");
    }
    if (!(vertical_fov > 0.0 && vertical_fov < 180.0)) {
        throw ValidationError("camera vertical_fov must lie in (0, 180) degrees");
    }
    if (width == 0 || height == 0) {
        throw ValidationError("camera image size must be positive");
    }
    if (!is_finite(eye) || !is_finite(target) || !is_finite(up)) {
        throw ValidationError("camera vectors must be finite");
    }
    if (norm(cross(normalized(target - eye), up)) < 1e-12) {
        throw ValidationError("camera up vector is parallel to the view direction");
    }
}

CameraBasis::CameraBasis(const Camera& cam) : eye(cam.eye) {
    forward = normalized(cam.target - cam.eye);
    right = normalized(cross(forward, cam.up));
    up = cross(right, forward);
    focal = 0.5 * static_cast<double>(cam.height) / std::tan(0.5 * deg_to_rad(cam.vertical_fov));
    cx = 0.5 * static_cast<double>(cam.width);
    cy = 0.5 * static_cast<double>(cam.height);
}

Vec3 CameraBasis::to_camera(const Vec3& p) const {
    const Vec3 t = p - eye;
    return {dot(t, right), dot(t, up), dot(t, forward)};
}

Vec3 CameraBasis::pixel_ray(std::size_t px, std::size_t py) const {
    const double a = (static_cast<double>(px) + 0.5 - cx) / focal;
    const double b = -(static_cast<double>(py) + 0.5 - cy) / focal;
    return forward + right * a + up * b;
}

std::vector<Camera> default_camera_rig(const Vec3& center, double scene_radius, const RigSettings& rig, Rng& rng) {
    if (!(rig.distance_lo > 0.0) || !(rig.distance_lo <= rig.distance_hi)) {
        throw ValidationError("camera distance range must satisfy 0 < lo <= hi");
    }
    if (rig.views == 0) {
        throw ValidationError("camera rig needs at least one view");
    }
    if (!(scene_radius > 0.0) || !std::isfinite(scene_radius)) {
        throw ValidationError("scene radius must be positive");
    }
    std::vector<Camera> cams;
    cams.reserve(rig.views);
    for (std::size_t i = 0; i < rig.views; ++i) {
        const double dist = scene_radius * rng.uniform(rig.distance_lo, rig.distance_hi);
        const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double elevation = deg_to_rad(rng.uniform(-15.0, 45.0));
        const Vec3 dir{std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                       std::sin(elevation)};
        Camera cam;
        cam.eye = center + dir * dist;
        cam.target = center;
        cam.up = {0.0, 0.0, 1.0};
        cam.vertical_fov = rig.vertical_fov;
        cam.width = rig.width;
        cam.height = rig.height;
        cam.validate();
        cams.push_back(cam);
    }
    return cams;
}

std::vector<RenderedView> render_gaussians(const GaussianCloud& cloud, const std::vector<Camera>& cams,
                                           const RenderOptions& options) {
    std::vector<RenderedView> out;
    out.reserve(cams.size());
    for (const Camera& cam : cams) {
        out.push_back(render_gaussian_view(cloud, cam, options));
    }
    return out;
}

std::vector<RenderedView> render_mesh(const TubeMesh& mesh, const std::vector<Camera>& cams,
                                      const RenderOptions& options) {
    std::vector<RenderedView> out;
    out.reserve(cams.size());
    for (const Camera& cam : cams) {
        out.push_back(render_mesh_view(mesh, cam, options));
    }
    return out;
}

}  // namespace bonsai

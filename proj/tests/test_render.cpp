#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bonsai/attractors.hpp"
#include "bonsai/error.hpp"
#include "bonsai/parallel.hpp"
#include "bonsai/render.hpp"

using namespace bonsai;

namespace {

// Nearest ray-triangle hit distance (Moller-Trumbore), +inf when missed.
double cast(const TubeMesh& mesh, const Vec3& eye, const Vec3& dir_unit) {
    double best = HUGE_VAL;
    for (const Face& f : mesh.faces) {
        const Vec3 a = mesh.vertices[f[0]], b = mesh.vertices[f[1]], c = mesh.vertices[f[2]];
        const Vec3 e1 = b - a, e2 = c - a;
        const Vec3 p = cross(dir_unit, e2);
        const double det = dot(e1, p);
        if (std::abs(det) < 1e-14) {
            continue;
        }
        const Vec3 s = eye - a;
        const double u = dot(s, p) / det;
        const Vec3 q = cross(s, e1);
        const double v = dot(dir_unit, q) / det;
        if (u < 0 || v < 0 || u + v > 1) {
            continue;
        }
        const double t = dot(e2, q) / det;
        if (t > 0 && t < best) {
            best = t;
        }
    }
    return best;
}

TubeMesh random_mesh(Rng& rng) {
    TubeMesh m;
    const std::size_t tris = 1 + rng.below(8);
    for (std::size_t t = 0; t < tris; ++t) {
        const Vec3 c{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
        for (int k = 0; k < 3; ++k) {
            m.vertices.push_back(c + random_unit_vector(rng) * rng.uniform(0.2, 0.7));
        }
        const auto base = static_cast<std::uint32_t>(3 * t);
        m.faces.push_back({base, base + 1, base + 2});
    }
    return m;
}

Camera looking_at_origin(const Vec3& eye, std::size_t w, std::size_t h, double fov = 40.0) {
    Camera c;
    c.eye = eye;
    c.target = {0, 0, 0};
    c.width = w;
    c.height = h;
    c.vertical_fov = fov;
    return c;
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("camera validation") {
    Camera c = looking_at_origin({0, -3, 0}, 8, 8);
    CHECK_NOTHROW(c.validate());
    c.vertical_fov = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = looking_at_origin({0, 0, 0}, 8, 8);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = looking_at_origin({0, 0, 3}, 8, 8);  // up parallel to view
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("camera basis is right-handed and pixel rays have unit forward component") {
    const Camera c = looking_at_origin({1, -3, 0.5}, 40, 30);
    const CameraBasis b(c);
    CHECK(std::abs(dot(b.right, b.up)) < 1e-15);
    CHECK(std::abs(dot(b.forward, b.up)) < 1e-15);
    CHECK(norm(cross(b.right, b.up) - b.forward * -1.0) < 1e-12);
    const Vec3 r = b.pixel_ray(7, 11);
    CHECK(dot(r, b.forward) == doctest::Approx(1.0));
    CHECK(b.to_camera(c.target).x == doctest::Approx(0.0));
}

TEST_CASE("rig distances stay in range and azimuths are uniform") {
    Rng rng(2024);
    RigSettings rig;
    rig.views = 1000;
    const Vec3 center{0.3, -0.2, 0.75};
    const double radius = 1.6;
    const auto cams = default_camera_rig(center, radius, rig, rng);
    REQUIRE(cams.size() == 1000);
    std::array<int, 10> bins{};
    for (const auto& c : cams) {
        const double d = distance(c.eye, center);
        CHECK(d >= 2.5 * radius - 1e-12);
        CHECK(d <= 4.0 * radius + 1e-12);
        CHECK(c.target == center);
        const Vec3 off = c.eye - center;
        const double elev = std::asin(off.z / d) * 180.0 / std::numbers::pi;
        CHECK(elev >= -15.0 - 1e-9);
        CHECK(elev <= 45.0 + 1e-9);
        double az = std::atan2(off.y, off.x);
        if (az < 0) {
            az += 2 * std::numbers::pi;
        }
        ++bins[std::min<std::size_t>(9, static_cast<std::size_t>(az / (2 * std::numbers::pi) * 10))];
    }
    double chi2 = 0;
    for (const int b : bins) {
        chi2 += (b - 100.0) * (b - 100.0) / 100.0;
    }
    CHECK(chi2 < 27.88);  // 9 dof, p = 0.001

    Rng again(2024);
    const auto cams2 = default_camera_rig(center, radius, rig, again);
    CHECK(cams2[17].eye == cams[17].eye);
}

TEST_CASE("rig preconditions") {
    Rng rng(1);
    RigSettings rig;
    rig.distance_lo = 5.0;
    CHECK_THROWS_AS(default_camera_rig({}, 1.0, rig, rng), ValidationError);
    rig = {};
    rig.views = 0;
    CHECK_THROWS_AS(default_camera_rig({}, 1.0, rig, rng), ValidationError);
}

TEST_CASE("facing triangle at distance 3") {
    TubeMesh m;
    m.vertices = {{-0.5, 0, -0.5}, {0.5, 0, -0.5}, {0, 0, 0.8}};
    m.faces = {{0, 1, 2}};
    const Camera c = looking_at_origin({0, -3, 0}, 33, 33, 1.0);
    const auto v = render_mesh(m, {c});
    CHECK(std::abs(v[0].depth.at(16, 16) - 3.0) < 1e-3);
}

TEST_CASE("mesh depth matches a per-pixel ray cast") {
    Rng rng(314);
    for (int t = 0; t < 10; ++t) {
        const TubeMesh m = random_mesh(rng);
        const Camera c = looking_at_origin(random_unit_vector(rng) * 3.0 + Vec3{0, 0, 0.01}, 16, 16, 50.0);
        const auto view = render_mesh(m, {c})[0];
        const CameraBasis b(c);
        for (std::size_t y = 0; y < 16; ++y) {
            for (std::size_t x = 0; x < 16; ++x) {
                const double expect = cast(m, c.eye, normalized(b.pixel_ray(x, y)));
                const double got = view.depth.at(x, y);
                if (std::isinf(expect)) {
                    CHECK(std::isinf(got));
                } else {
                    CHECK(std::abs(got - expect) < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("empty inputs render background only") {
    const Camera c = looking_at_origin({0, -3, 0}, 12, 9);
    const auto g = render_gaussians(GaussianCloud{}, {c});
    for (const double d : g[0].depth.depth) {
        CHECK(std::isinf(d));
    }
    const auto m = render_mesh(TubeMesh{}, {c});
    CHECK(mask_from_depth(m[0].depth).pixels == std::vector<std::uint8_t>(12 * 9, 0));
}

TEST_CASE("isolated splat renders at its center depth") {
    GaussianCloud cloud;
    Splat s;
    s.mu = {0.1, 0.0, -0.05};
    s.cov = Mat3::scaled_identity(0.02 * 0.02);
    s.color = {1, 0, 0};
    s.opacity = 0.9;
    cloud.splats.push_back(s);
    const Camera c = looking_at_origin({0, -3, 0}, 64, 64);
    const auto v = render_gaussians(cloud, {c})[0];
    const CameraBasis b(c);
    const double center = distance(s.mu, c.eye);
    const double pixel = center / b.focal;  // one pixel of lateral spread at that range
    std::size_t covered = 0;
    for (const double d : v.depth.depth) {
        if (std::isfinite(d)) {
            ++covered;
            CHECK(std::abs(d - center) <= pixel);
        }
    }
    CHECK(covered > 0);
    const Vec3 t = b.to_camera(s.mu);
    const auto px = static_cast<std::size_t>(b.cx + b.focal * t.x / t.z);
    const auto py = static_cast<std::size_t>(b.cy - b.focal * t.y / t.z);
    CHECK(v.color.at(px, py).r > 0.5);
    CHECK(v.color.at(px, py).g == 0.0);
}

TEST_CASE("nearer splats occlude farther ones") {
    GaussianCloud cloud;
    Splat far_s;
    far_s.mu = {0, 1, 0};
    far_s.cov = Mat3::scaled_identity(0.01);
    far_s.color = {0, 0, 1};
    Splat near_s = far_s;
    near_s.mu = {0, -1, 0};
    near_s.color = {1, 0, 0};
    cloud.splats = {far_s, near_s};
    const auto v = render_gaussians(cloud, {looking_at_origin({0, -3, 0}, 32, 32)})[0];
    const Rgb c = v.color.at(16, 16);
    CHECK(c.r > 0.9);
    CHECK(c.b < 0.1);
    CHECK(v.depth.at(16, 16) > 2.0 - 0.1);
    CHECK(v.depth.at(16, 16) < 2.0 + 0.2);
}

TEST_CASE("renders do not depend on the worker count") {
    Rng rng(5);
    GaussianCloud cloud;
    for (int i = 0; i < 3000; ++i) {
        Splat s;
        s.mu = random_unit_vector(rng) * rng.uniform(0, 1);
        s.cov = Mat3::scaled_identity(0.0004);
        s.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        s.opacity = rng.uniform(0.2, 1.0);
        cloud.splats.push_back(s);
    }
    const TubeMesh mesh = random_mesh(rng);
    const auto cams = std::vector<Camera>{looking_at_origin({0.5, -3, 1}, 70, 50)};
    set_worker_count(1);
    const auto g1 = render_gaussians(cloud, cams);
    const auto m1 = render_mesh(mesh, cams);
    set_worker_count(3);
    const auto g3 = render_gaussians(cloud, cams);
    const auto m3 = render_mesh(mesh, cams);
    set_worker_count(0);
    CHECK(g1[0].depth.depth == g3[0].depth.depth);
    CHECK(g1[0].color.pixels == g3[0].color.pixels);
    CHECK(m1[0].depth.depth == m3[0].depth.depth);
}

}

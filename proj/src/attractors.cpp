#include "bonsai/attractors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bonsai/parallel.hpp"

namespace bonsai {

std::size_t AttractorField::alive_count() const {
    std::size_t n = 0;
    for (const char a : alive) {
        n += a ? 1 : 0;
    }
    return n;
}

std::vector<Vec3> AttractorField::alive_points() const {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (alive[i]) {
            out.push_back(points[i]);
        }
    }
    return out;
}

bool domain_contains(const Vec3& p, double radius) {
    const double r2 = radius * radius;
    const double planar = p.x * p.x + p.y * p.y;
    if (planar > r2) {
        return false;
    }
    const double dz = (p.z - radius) / (0.5 * radius);
    return planar / r2 + dz * dz <= 1.0;
}

Vec3 random_unit_vector(Rng& rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rho = std::sqrt(std::fmax(0.0, 1.0 - z * z));
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

AttractorField sample_attractors(double radius, std::size_t n, Rng& rng, bool uniform_volume) {
    AttractorField field;
    field.domain_radius = radius;
    field.points.reserve(n);
    while (field.points.size() < n) {
        const Vec3 dir = random_unit_vector(rng);
        const double u = rng.uniform();
        const double magnitude = radius * (uniform_volume ? std::cbrt(u) : u);
        const Vec3 p = place_attractor(radius, dir, magnitude);
        if (domain_contains(p, radius)) {
            field.points.push_back(p);
        }
    }
    field.alive.assign(n, 1);
    return field;
}

std::vector<std::size_t> kill_near(AttractorField& field, const KdTree& nodes, double kill_distance) {
    std::vector<char> hit(field.size(), 0);
    parallel_for(field.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (field.alive[i] && nodes.any_within(field.points[i], kill_distance)) {
                hit[i] = 1;
            }
        }
    });
    std::vector<std::size_t> killed;
    for (std::size_t i = 0; i < hit.size(); ++i) {
        if (hit[i]) {
            field.alive[i] = 0;
            killed.push_back(i);
        }
    }
    return killed;
}

std::size_t kill_pass(AttractorField& field, const Skeleton& skeleton, double kill_distance) {
    std::vector<Vec3> positions;
    positions.reserve(skeleton.size());
    for (const auto& node : skeleton.nodes()) {
        positions.push_back(node.position);
    }
    const KdTree tree(positions);
    return kill_near(field, tree, kill_distance).size();
}

std::string attractors_to_ply(const AttractorField& field) {
    const auto pts = field.alive_points();
    std::ostringstream out;
    out << "ply\nformat ascii 1.0\nelement vertex " << pts.size()
        << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    for (const auto& p : pts) {
        out << format_number(p.x) << ' ' << format_number(p.y) << ' ' << format_number(p.z) << '\n';
    }
    return out.str();
}

}  // namespace bonsai

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bonsai/model.hpp"
#include "bonsai/rng.hpp"
#include "bonsai/spatial.hpp"
#include "bonsai/vec3.hpp"

namespace bonsai {

/// Attraction points ("leaves") with alive flags. Killed points are flagged,
/// never erased, so indices stay stable for the whole run.
struct AttractorField {
    std::vector<Vec3> points;
    std::vector<char> alive;
    double domain_radius = 1.0;

    std::size_t size() const { return points.size(); }
    std::size_t alive_count() const;
    std::vector<Vec3> alive_points() const;
};

/// Crown domain membership: the solid half-height ellipsoid centered at
/// (0, 0, R) with semi-axes (R, R, R/2).
bool domain_contains(const Vec3& p, double radius);

/// Center of the crown domain.
constexpr Vec3 domain_center(double radius) { return {0.0, 0.0, radius}; }

/// One candidate leaf: center + direction * magnitude.
inline Vec3 place_attractor(double radius, const Vec3& direction, double magnitude) {
    return domain_center(radius) + direction * magnitude;
}

/// Uniform direction on the unit sphere.
Vec3 random_unit_vector(Rng& rng);

/// n attractors inside the crown domain. Default placement draws a uniform
/// direction and a magnitude uniform in [0, R] from the domain center, which
/// concentrates points toward the center; `uniform_volume` draws the
/// magnitude as R * cbrt(u) instead. Candidates outside the domain are redrawn.
AttractorField sample_attractors(double radius, std::size_t n, Rng& rng, bool uniform_volume = false);

/// Marks every alive attractor strictly closer than kill_distance to some
/// node as dead. Returns the indices newly killed, ascending. The per-point
/// test runs in parallel; the result does not depend on the worker count.
std::vector<std::size_t> kill_near(AttractorField& field, const KdTree& nodes, double kill_distance);

/// kill_near against every node of the skeleton; returns the number killed.
std::size_t kill_pass(AttractorField& field, const Skeleton& skeleton, double kill_distance);

/// ASCII PLY with one vertex per alive attractor.
std::string attractors_to_ply(const AttractorField& field);

}  // namespace bonsai

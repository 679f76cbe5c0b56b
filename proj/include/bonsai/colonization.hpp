#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bonsai/attractors.hpp"
#include "bonsai/model.hpp"
#include "bonsai/spatial.hpp"

namespace bonsai {

struct IterationRecord {
    std::size_t iteration = 0;    // 1-based
    std::size_t nodes_added = 0;  // attractor-driven nodes (bootstrap steps excluded)
    std::size_t killed = 0;
    std::size_t alive = 0;
    std::size_t node_count = 0;  // skeleton size after the iteration
    std::size_t degenerate = 0;  // nodes skipped because their pulls cancelled
    bool bootstrap = false;      // iteration extended the trunk instead of colonizing
};

struct GrowthTrace {
    std::vector<IterationRecord> records;

    /// CSV with columns iteration,nodes_added,killed,alive.
    std::string to_csv() const;
};

struct GrowthResult {
    Skeleton skeleton;
    GrowthTrace trace;
    AttractorField field;  // final alive flags
    /// Iteration in which each attractor was killed, 0 while still alive.
    std::vector<std::size_t> kill_iteration;
};

/// Per-attractor pull strength:
///   omega * exp(-falloff * dist / influence_distance) * (1 + tropism * max(0, v.z / |v|)),
/// clamped at zero. With falloff = tropism = 0 every attractor weighs omega.
double attractor_weight(const Vec3& v, double dist, const GrowthWeights& weights, double influence_distance);

/// For each node, the attractor indices (ascending) that pull it this
/// iteration. In `nearest` mode an alive attractor goes to its single closest
/// node (lowest id on ties) when that distance is strictly below
/// influence_distance; `all_in_range` hands it to every node in range.
std::vector<std::vector<std::size_t>> assign_attractors(const AttractorField& field, const KdTree& nodes,
                                                        double influence_distance,
                                                        AssignmentMode mode = AssignmentMode::nearest);

std::vector<std::vector<std::size_t>> assign_attractors(const AttractorField& field, const Skeleton& skeleton,
                                                        double influence_distance,
                                                        AssignmentMode mode = AssignmentMode::nearest);

/// Unit growth direction toward the weighted mean of the unit vectors from
/// `origin` to each attractor. Throws DegenerateDirection when the mean
/// vector is shorter than 1e-12.
Vec3 child_direction(const Vec3& origin, std::span<const Vec3> attractors, const GrowthWeights& weights,
                     double influence_distance);

/// Runs the colonization loop from a root at the origin pointing up.
/// Pure function of (field, params); throws on invalid params.
GrowthResult grow(AttractorField field, const GrowthParams& params);

/// Samples the attractor field from the "attractors" sub-stream of
/// params.seed, then grows.
GrowthResult generate(const GrowthParams& params);

}  // namespace bonsai

#include "bonsai/colonization.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bonsai/error.hpp"
#include "bonsai/parallel.hpp"

namespace bonsai {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kDuplicateDistance = 1e-6;
constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

std::vector<Vec3> positions_of(const Skeleton& s) {
    std::vector<Vec3> out;
    out.reserve(s.size());
    for (const auto& node : s.nodes()) {
        out.push_back(node.position);
    }
    return out;
}

bool has_child_near(const Skeleton& s, NodeId parent, const Vec3& pos) {
    for (const NodeId c : s.node(parent).children) {
        if (distance(s.node(c).position, pos) < kDuplicateDistance) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::string GrowthTrace::to_csv() const {
    std::ostringstream out;
    out << "iteration,nodes_added,killed,alive\n";
    for (const auto& r : records) {
        out << r.iteration << ',' << r.nodes_added << ',' << r.killed << ',' << r.alive << '\n';
    }
    return out.str();
}

double attractor_weight(const Vec3& v, double dist, const GrowthWeights& weights, double influence_distance) {
    const double upward = dist > 0.0 ? std::fmax(0.0, v.z / dist) : 0.0;
    const double w = weights.omega * std::exp(-weights.falloff * dist / influence_distance) *
                     (1.0 + weights.tropism * upward);
    return std::fmax(0.0, w);
}

std::vector<std::vector<std::size_t>> assign_attractors(const AttractorField& field, const KdTree& nodes,
                                                        double influence_distance, AssignmentMode mode) {
    std::vector<std::vector<std::size_t>> by_node(nodes.size());
    if (mode == AssignmentMode::nearest) {
        std::vector<std::size_t> owner(field.size(), kUnassigned);
        parallel_for(field.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                if (!field.alive[i]) {
                    continue;
                }
                if (const auto hit = nodes.nearest(field.points[i], influence_distance)) {
                    owner[i] = hit->index;
                }
            }
        });
        for (std::size_t i = 0; i < owner.size(); ++i) {
            if (owner[i] != kUnassigned) {
                by_node[owner[i]].push_back(i);
            }
        }
    } else {
        std::vector<std::vector<std::size_t>> in_range(field.size());
        parallel_for(field.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                if (field.alive[i]) {
                    in_range[i] = nodes.within(field.points[i], influence_distance);
                }
            }
        });
        for (std::size_t i = 0; i < in_range.size(); ++i) {
            for (const std::size_t n : in_range[i]) {
                by_node[n].push_back(i);
            }
        }
    }
    return by_node;
}

std::vector<std::vector<std::size_t>> assign_attractors(const AttractorField& field, const Skeleton& skeleton,
                                                        double influence_distance, AssignmentMode mode) {
    const KdTree tree(positions_of(skeleton));
    return assign_attractors(field, tree, influence_distance, mode);
}

Vec3 child_direction(const Vec3& origin, std::span<const Vec3> attractors, const GrowthWeights& weights,
                     double influence_distance) {
    Vec3 sum;
    for (const Vec3& a : attractors) {
        const Vec3 v = a - origin;
        const double dist = norm(v);
        if (dist == 0.0) {
            continue;
        }
        sum += v * (attractor_weight(v, dist, weights, influence_distance) / dist);
    }
    if (!attractors.empty()) {
        sum = sum / static_cast<double>(attractors.size());
    }
    const double len = norm(sum);
    if (!(len >= kDegenerateNorm)) {
        throw DegenerateDirection("attractor pulls cancel out");
    }
    return sum / len;
}

GrowthResult grow(AttractorField field, const GrowthParams& params) {
    validate_params(params);
    GrowthResult result;
    Skeleton skeleton = Skeleton::with_root({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, params);
    std::vector<Vec3> positions = positions_of(skeleton);
    std::vector<std::size_t> kill_iteration(field.size(), 0);

    bool bootstrapping = true;
    NodeId trunk_tip = skeleton.root_id();
    std::size_t stalled = 0;
    std::vector<Vec3> pulls;

    for (std::size_t it = 1; it <= params.max_iterations; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        const auto assignment = [&] {
            const KdTree tree(positions);
            return assign_attractors(field, tree, params.influence_distance, params.assignment);
        }();
        bool any_assigned = false;
        for (const auto& list : assignment) {
            any_assigned = any_assigned || !list.empty();
        }
        if (any_assigned) {
            bootstrapping = false;
        }
        if (!any_assigned) {
            if (!bootstrapping) {
                break;
            }
            // Nothing is in reach yet: extend the trunk straight up.
            const Vec3 up{0.0, 0.0, 1.0};
            const Vec3 pos = skeleton.node(trunk_tip).position + up * params.step;
            trunk_tip = skeleton.add_child(trunk_tip, pos, up);
            positions.push_back(pos);
            rec.bootstrap = true;
        } else {
            for (NodeId id = 0; id < assignment.size(); ++id) {
                if (assignment[id].empty()) {
                    continue;
                }
                pulls.clear();
                for (const std::size_t a : assignment[id]) {
                    pulls.push_back(field.points[a]);
                }
                const Vec3 origin = skeleton.node(id).position;
                Vec3 dir;
                try {
                    dir = child_direction(origin, pulls, params.weights, params.influence_distance);
                } catch (const DegenerateDirection&) {
                    ++rec.degenerate;
                    continue;
                }
                const Vec3 pos = origin + dir * params.step;
                if (has_child_near(skeleton, id, pos)) {
                    continue;
                }
                skeleton.add_child(id, pos, dir);
                positions.push_back(pos);
                ++rec.nodes_added;
            }
        }

        const KdTree tree(positions);
        const auto killed = kill_near(field, tree, params.kill_distance);
        for (const std::size_t a : killed) {
            kill_iteration[a] = it;
        }
        rec.killed = killed.size();
        rec.alive = field.alive_count();
        rec.node_count = skeleton.size();
        result.trace.records.push_back(rec);

        if (rec.killed == 0 && rec.nodes_added == 0) {
            if (++stalled >= params.stall_limit) {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    result.skeleton = std::move(skeleton);
    result.field = std::move(field);
    result.kill_iteration = std::move(kill_iteration);
    return result;
}

GrowthResult generate(const GrowthParams& params) {
    validate_params(params);
    Rng rng = substream(params.seed, "attractors");
    return grow(sample_attractors(params.radius, params.n_attractors, rng, params.uniform_volume), params);
}

}  // namespace bonsai

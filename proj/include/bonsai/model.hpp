#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bonsai/vec3.hpp"

namespace bonsai {

using NodeId = std::size_t;

/// Learnable growth weights. Layout of the 4-vector form is
/// (omega, falloff, tropism, reserved); the reserved slot is carried through
/// fitting and serialization but never read by the growth rule.
struct GrowthWeights {
    double omega = 1.0;
    double falloff = 0.0;
    double tropism = 0.0;
    double reserved = 0.0;

    std::array<double, 4> to_array() const { return {omega, falloff, tropism, reserved}; }
    static GrowthWeights from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

    bool operator==(const GrowthWeights&) const = default;
};

enum class AssignmentMode {
    nearest,       // each attractor pulls only its closest node
    all_in_range,  // each attractor pulls every node within the influence distance
};

std::string_view to_string(AssignmentMode mode);
AssignmentMode assignment_mode_from_string(std::string_view s);

struct GrowthParams {
    double radius = 1.0;  // crown domain radius R
    std::size_t n_attractors = 2000;
    double step = 0.03;  // growth step
    double kill_distance = 0.09;
    double influence_distance = 0.3;
    GrowthWeights weights;
    std::size_t max_iterations = 1000;
    std::size_t stall_limit = 100;
    std::uint64_t seed = 42;
    AssignmentMode assignment = AssignmentMode::nearest;
    bool uniform_volume = false;  // volume-uniform attractors instead of the center-biased default

    bool operator==(const GrowthParams&) const = default;
};

/// Throws NonPositive or OrderingViolation when the parameters cannot drive a growth run.
void validate_params(const GrowthParams& p);

struct SizingParams {
    double extremity_size = 0.01;  // r_e
    double inverted_growth = 2.0;  // I_g
    std::size_t ring_segments = 8;  // S

    bool operator==(const SizingParams&) const = default;
};

void validate_sizing(const SizingParams& sp);

struct BranchNode {
    NodeId id = 0;
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    Vec3 position;
    Vec3 direction{0.0, 0.0, 1.0};
    double size = 0.0;

    bool operator==(const BranchNode&) const = default;
};

/// Branch graph. Node ids are dense and equal to the index in `nodes`,
/// assigned in creation order, so parents always precede their children.
class Skeleton {
public:
    Skeleton() = default;
    Skeleton(std::vector<BranchNode> nodes, NodeId root, GrowthParams params);

    /// Fresh skeleton holding only a root node.
    static Skeleton with_root(const Vec3& position, const Vec3& direction, GrowthParams params);

    const std::vector<BranchNode>& nodes() const { return nodes_; }
    const BranchNode& node(NodeId id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }
    NodeId root_id() const { return root_; }
    const GrowthParams& params_used() const { return params_; }

    /// Number of non-root nodes.
    std::size_t branch_count() const { return nodes_.empty() ? 0 : nodes_.size() - 1; }
    std::size_t extremity_count() const;
    bool is_sized() const;
    Aabb bounds() const;

    /// Appends a child of `parent` at `position`; returns its id.
    NodeId add_child(NodeId parent, const Vec3& position, const Vec3& direction);
    void set_size(NodeId id, double size) { nodes_.at(id).size = size; }

    /// Throws InvariantViolation naming the first broken tree/geometry invariant.
    void validate() const;

    bool operator==(const Skeleton&) const = default;

private:
    std::vector<BranchNode> nodes_;
    NodeId root_ = 0;
    GrowthParams params_;
};

/// Canonical JSON document: sorted keys, 9 significant digits, one node per
/// line. Equal skeletons give equal bytes.
std::string serialize_skeleton(const Skeleton& s);

/// Throws ParseError for malformed documents and InvariantViolation for
/// well-formed documents describing an invalid tree.
Skeleton deserialize_skeleton(std::string_view text);

/// "%.9g" rendering (with -0 folded to 0) shared by every text format in the project.
std::string format_number(double v);

}  // namespace bonsai

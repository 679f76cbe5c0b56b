#include "bonsai/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bonsai/error.hpp"
#include "json.hpp"

namespace bonsai {

namespace {

constexpr int kSkeletonVersion = 1;
constexpr double kUnitTolerance = 1e-9;
constexpr double kStepTolerance = 1e-6;

std::string describe(double v) { return format_number(v); }

}  // namespace

std::string_view to_string(AssignmentMode mode) {
    switch (mode) {
        case AssignmentMode::nearest:
            return "nearest";
        case AssignmentMode::all_in_range:
            return "all_in_range";
    }
    return "nearest";
}

AssignmentMode assignment_mode_from_string(std::string_view s) {
    if (s == "nearest") {
        return AssignmentMode::nearest;
    }
    if (s == "all_in_range") {
        return AssignmentMode::all_in_range;
    }
    throw ValidationError("unknown assignment mode '" + std::string(s) +
                          "' (expected nearest or all_in_range)");
}

void validate_params(const GrowthParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NonPositive(std::string(name) + " must be positive (got " + describe(v) + ")");
        }
    };
    positive(p.radius, "radius");
    positive(p.step, "step");
    positive(p.kill_distance, "kill_distance");
    positive(p.influence_distance, "influence_distance");
    positive(p.weights.omega, "omega");
    if (p.n_attractors == 0) {
        throw NonPositive("attractors must be positive");
    }
    if (p.max_iterations == 0) {
        throw NonPositive("max_iterations must be positive");
    }
    if (p.stall_limit == 0) {
        throw NonPositive("stall_limit must be positive");
    }
    if (!std::isfinite(p.weights.falloff) || !std::isfinite(p.weights.tropism) ||
        !std::isfinite(p.weights.reserved)) {
        throw ValidationError("growth weights must be finite");
    }
    if (!(p.step < p.kill_distance)) {
        throw OrderingViolation("kill distance must be greater than the growth step (step=" +
                                describe(p.step) + ", kill_distance=" + describe(p.kill_distance) + ")");
    }
    if (!(p.kill_distance < p.influence_distance)) {
        throw OrderingViolation("kill distance must be less than the influence distance (kill_distance=" +
                                describe(p.kill_distance) +
                                ", influence_distance=" + describe(p.influence_distance) + ")");
    }
}

void validate_sizing(const SizingParams& sp) {
    if (!(sp.extremity_size > 0.0) || !std::isfinite(sp.extremity_size)) {
        throw NonPositive("extremity_size must be positive");
    }
    if (!(sp.inverted_growth > 0.0) || !std::isfinite(sp.inverted_growth)) {
        throw NonPositive("inverted_growth must be positive (got " + describe(sp.inverted_growth) + ")");
    }
    if (sp.ring_segments < 3) {
        throw ValidationError("ring_segments must be >= 3");
    }
}

Skeleton::Skeleton(std::vector<BranchNode> nodes, NodeId root, GrowthParams params)
    : nodes_(std::move(nodes)), root_(root), params_(params) {}

Skeleton Skeleton::with_root(const Vec3& position, const Vec3& direction, GrowthParams params) {
    BranchNode root;
    root.id = 0;
    root.position = position;
    root.direction = direction;
    return Skeleton({root}, 0, params);
}

std::size_t Skeleton::extremity_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) {
        n += node.children.empty() ? 1 : 0;
    }
    return n;
}

bool Skeleton::is_sized() const {
    for (const auto& node : nodes_) {
        if (!(node.size > 0.0)) {
            return false;
        }
    }
    return !nodes_.empty();
}

Aabb Skeleton::bounds() const {
    Aabb box;
    for (const auto& node : nodes_) {
        box.expand(node.position);
    }
    return box;
}

NodeId Skeleton::add_child(NodeId parent, const Vec3& position, const Vec3& direction) {
    BranchNode child;
    child.id = nodes_.size();
    child.parent = parent;
    child.position = position;
    child.direction = direction;
    nodes_.at(parent).children.push_back(child.id);
    nodes_.push_back(std::move(child));
    return nodes_.back().id;
}

void Skeleton::validate() const {
    const std::size_t n = nodes_.size();
    if (n == 0) {
        throw InvariantViolation("skeleton has no nodes");
    }
    std::size_t roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const BranchNode& node = nodes_[i];
        const std::string where = "node " + std::to_string(i) + ": ";
        if (node.id != i) {
            throw InvariantViolation(where + "id " + std::to_string(node.id) + " does not match its index");
        }
        if (!is_finite(node.position) || !is_finite(node.direction)) {
            throw InvariantViolation(where + "non-finite position or direction");
        }
        if (std::abs(norm(node.direction) - 1.0) > kUnitTolerance) {
            throw InvariantViolation(where + "direction is not unit length");
        }
        if (!(node.size >= 0.0) || !std::isfinite(node.size)) {
            throw InvariantViolation(where + "size must be finite and non-negative");
        }
        if (!node.parent) {
            ++roots;
            if (i != root_) {
                throw InvariantViolation(where + "parentless node is not the declared root");
            }
        } else {
            const NodeId p = *node.parent;
            if (p >= n) {
                throw InvariantViolation(where + "dangling parent " + std::to_string(p));
            }
            if (p >= i) {
                throw InvariantViolation(where + "parent " + std::to_string(p) +
                                         " was not created before the node");
            }
            const auto& siblings = nodes_[p].children;
            if (std::count(siblings.begin(), siblings.end(), i) != 1) {
                throw InvariantViolation(where + "parent " + std::to_string(p) + " does not list it as a child");
            }
            const double len = distance(node.position, nodes_[p].position);
            if (std::abs(len - params_.step) > kStepTolerance) {
                throw InvariantViolation(where + "edge length " + describe(len) + " differs from step " +
                                         describe(params_.step));
            }
        }
        for (const NodeId c : node.children) {
            if (c >= n) {
                throw InvariantViolation(where + "dangling child " + std::to_string(c));
            }
            if (nodes_[c].parent != std::optional<NodeId>(i)) {
                throw InvariantViolation(where + "child " + std::to_string(c) + " names a different parent");
            }
        }
    }
    if (root_ >= n || roots != 1) {
        throw InvariantViolation("skeleton must have exactly one root (found " + std::to_string(roots) + ")");
    }
    // With consistent parent/child links and a single root, the graph is a
    // tree iff every node is reached from the root exactly once.
    std::vector<char> seen(n, 0);
    std::vector<NodeId> stack{root_};
    std::size_t visited = 0;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        if (seen[id]) {
            throw InvariantViolation("cycle through node " + std::to_string(id));
        }
        seen[id] = 1;
        ++visited;
        for (const NodeId c : nodes_[id].children) {
            stack.push_back(c);
        }
    }
    if (visited != n) {
        throw InvariantViolation("skeleton contains a cycle or unreachable nodes");
    }
}

std::string format_number(double v) {
    if (v == 0.0) {
        return "0";  // also folds -0
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

void write_vec(std::ostringstream& out, const Vec3& v) {
    out << '[' << format_number(v.x) << ',' << format_number(v.y) << ',' << format_number(v.z) << ']';
}

void write_params(std::ostringstream& out, const GrowthParams& p) {
    const auto theta = p.weights.to_array();
    out << "{\"assignment\":\"" << to_string(p.assignment) << "\""
        << ",\"attractors\":" << p.n_attractors
        << ",\"influence_distance\":" << format_number(p.influence_distance)
        << ",\"kill_distance\":" << format_number(p.kill_distance)
        << ",\"max_iterations\":" << p.max_iterations
        << ",\"radius\":" << format_number(p.radius)
        << ",\"seed\":" << p.seed
        << ",\"stall_limit\":" << p.stall_limit
        << ",\"step\":" << format_number(p.step)
        << ",\"theta\":[" << format_number(theta[0]) << ',' << format_number(theta[1]) << ','
        << format_number(theta[2]) << ',' << format_number(theta[3]) << ']'
        << ",\"uniform_volume\":" << (p.uniform_volume ? "true" : "false") << '}';
}

using nlohmann::json;

std::size_t get_index(const json& j, const char* what) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw ParseError(std::string(what) + " must be a non-negative integer");
    }
    return j.get<std::size_t>();
}

double get_real(const json& j, const char* what) {
    if (!j.is_number()) {
        throw ParseError(std::string(what) + " must be a number");
    }
    return j.get<double>();
}

Vec3 get_vec(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError(std::string(what) + " must be an array of 3 numbers");
    }
    return {get_real(j[0], what), get_real(j[1], what), get_real(j[2], what)};
}

const json& field(const json& obj, const char* key) {
    if (!obj.is_object()) {
        throw ParseError(std::string("expected an object holding '") + key + "'");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(std::string("missing key '") + key + "'");
    }
    return *it;
}

GrowthParams read_params(const json& j) {
    GrowthParams p;
    const json& mode = field(j, "assignment");
    if (!mode.is_string()) {
        throw ParseError("assignment must be a string");
    }
    try {
        p.assignment = assignment_mode_from_string(mode.get<std::string>());
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
    p.n_attractors = get_index(field(j, "attractors"), "attractors");
    p.influence_distance = get_real(field(j, "influence_distance"), "influence_distance");
    p.kill_distance = get_real(field(j, "kill_distance"), "kill_distance");
    p.max_iterations = get_index(field(j, "max_iterations"), "max_iterations");
    p.radius = get_real(field(j, "radius"), "radius");
    const json& seed = field(j, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
        throw ParseError("seed must be a non-negative integer");
    }
    p.seed = seed.get<std::uint64_t>();
    p.stall_limit = get_index(field(j, "stall_limit"), "stall_limit");
    p.step = get_real(field(j, "step"), "step");
    const json& theta = field(j, "theta");
    if (!theta.is_array() || theta.size() != 4) {
        throw ParseError("theta must be an array of 4 numbers");
    }
    p.weights = GrowthWeights::from_array({get_real(theta[0], "theta"), get_real(theta[1], "theta"),
                                           get_real(theta[2], "theta"), get_real(theta[3], "theta")});
    const json& uv = field(j, "uniform_volume");
    if (!uv.is_boolean()) {
        throw ParseError("uniform_volume must be a boolean");
    }
    p.uniform_volume = uv.get<bool>();
    return p;
}

}  // namespace

std::string serialize_skeleton(const Skeleton& s) {
    std::ostringstream out;
    out << "{\n\"nodes\":[\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const BranchNode& node = s.nodes()[i];
        out << "{\"children\":[";
        for (std::size_t c = 0; c < node.children.size(); ++c) {
            out << (c ? "," : "") << node.children[c];
        }
        out << "],\"direction\":";
        write_vec(out, node.direction);
        out << ",\"id\":" << node.id << ",\"parent\":";
        if (node.parent) {
            out << *node.parent;
        } else {
            out << "null";
        }
        out << ",\"position\":";
        write_vec(out, node.position);
        out << ",\"size\":" << format_number(node.size) << '}' << (i + 1 < s.size() ? ",\n" : "\n");
    }
    out << "],\n\"params\":";
    write_params(out, s.params_used());
    out << ",\n\"version\":" << kSkeletonVersion << "\n}\n";
    return out.str();
}

Skeleton deserialize_skeleton(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw ParseError(std::string("skeleton JSON: ") + e.what());
    }
    std::vector<BranchNode> nodes;
    GrowthParams params;
    NodeId root = 0;
    try {
        const json& version = field(doc, "version");
        if (!version.is_number_integer() || version.get<int>() != kSkeletonVersion) {
            throw ParseError("unsupported skeleton version");
        }
        params = read_params(field(doc, "params"));
        const json& list = field(doc, "nodes");
        if (!list.is_array()) {
            throw ParseError("nodes must be an array");
        }
        nodes.reserve(list.size());
        for (const json& jn : list) {
            BranchNode node;
            node.id = get_index(field(jn, "id"), "id");
            const json& parent = field(jn, "parent");
            if (!parent.is_null()) {
                node.parent = get_index(parent, "parent");
            }
            const json& children = field(jn, "children");
            if (!children.is_array()) {
                throw ParseError("children must be an array");
            }
            for (const json& c : children) {
                node.children.push_back(get_index(c, "child id"));
            }
            node.position = get_vec(field(jn, "position"), "position");
            node.direction = get_vec(field(jn, "direction"), "direction");
            node.size = get_real(field(jn, "size"), "size");
            nodes.push_back(std::move(node));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("skeleton JSON: ") + e.what());
    }
    try {
        validate_params(params);
    } catch (const ValidationError& e) {
        throw InvariantViolation(std::string("params: ") + e.what());
    }
    // The root is the parentless node; validate() rejects zero or several.
    for (const BranchNode& node : nodes) {
        if (!node.parent) {
            root = node.id;
            break;
        }
    }
    Skeleton s(std::move(nodes), root, params);
    s.validate();
    return s;
}

}  // namespace bonsai

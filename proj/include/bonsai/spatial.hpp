#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bonsai/vec3.hpp"

namespace bonsai {

struct Neighbor {
    std::size_t index = 0;
    double sq_distance = 0.0;
};

/// Static 3D kd-tree over a point set. All queries are exact and resolve
/// equal distances by the lowest point index, so results match a brute-force
/// scan over the same points.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Vec3& point(std::size_t i) const { return points_[i]; }

    /// Closest point whose distance is strictly below max_distance.
    std::optional<Neighbor> nearest(const Vec3& q,
                                    double max_distance = std::numeric_limits<double>::infinity()) const;

    /// True iff some point lies at distance strictly below radius.
    bool any_within(const Vec3& q, double radius) const;

    /// Indices (ascending) of all points at distance strictly below radius.
    std::vector<std::size_t> within(const Vec3& q, double radius) const;

    /// The k closest points ordered by (distance, index), skipping `exclude`.
    std::vector<Neighbor> k_nearest(const Vec3& q, std::size_t k,
                                    std::size_t exclude = std::numeric_limits<std::size_t>::max()) const;

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;  // -1 marks a leaf
        std::int32_t right = -1;
        int axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void nearest_impl(std::int32_t node, const Vec3& q, double max_distance, Neighbor& best,
                      bool& found) const;
    bool any_within_impl(std::int32_t node, const Vec3& q, double radius) const;
    void within_impl(std::int32_t node, const Vec3& q, double radius,
                     std::vector<std::size_t>& out) const;
    void k_nearest_impl(std::int32_t node, const Vec3& q, std::size_t k, std::size_t exclude,
                        std::vector<Neighbor>& heap) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace bonsai

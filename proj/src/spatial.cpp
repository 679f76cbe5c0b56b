#include "bonsai/spatial.hpp"

#include <algorithm>
#include <cmath>

namespace bonsai {

namespace {

constexpr std::uint32_t kLeafSize = 8;

bool closer(const Neighbor& a, const Neighbor& b) {
    return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) {
        order_[i] = i;
    }
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) {
        return id;
    }
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) {
        box.expand(points_[order_[i]]);
    }
    const Vec3 extent = box.hi - box.lo;
    int axis = 0;
    if (extent.y > extent.x) {
        axis = 1;
    }
    if (extent.z > extent[axis]) {
        axis = 2;
    }
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

// Left children hold coordinates <= split, right children >= split, so the
// distance from q to any point on the far side is at least |q[axis] - split|.

std::optional<Neighbor> KdTree::nearest(const Vec3& q, double max_distance) const {
    if (nodes_.empty()) {
        return std::nullopt;
    }
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    bool found = false;
    nearest_impl(0, q, max_distance, best, found);
    if (!found || !(std::sqrt(best.sq_distance) < max_distance)) {
        return std::nullopt;
    }
    return best;
}

void KdTree::nearest_impl(std::int32_t id, const Vec3& q, double max_distance, Neighbor& best,
                          bool& found) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const Neighbor cand{order_[i], squared_distance(q, points_[order_[i]])};
            if (!found || closer(cand, best)) {
                best = cand;
                found = true;
            }
        }
        return;
    }
    const double diff = q[node.axis] - node.split;
    const std::int32_t near_side = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far_side = diff <= 0.0 ? node.right : node.left;
    nearest_impl(near_side, q, max_distance, best, found);
    if (std::abs(diff) < max_distance && (!found || diff * diff <= best.sq_distance)) {
        nearest_impl(far_side, q, max_distance, best, found);
    }
}

bool KdTree::any_within(const Vec3& q, double radius) const {
    return !nodes_.empty() && any_within_impl(0, q, radius);
}

bool KdTree::any_within_impl(std::int32_t id, const Vec3& q, double radius) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            if (std::sqrt(squared_distance(q, points_[order_[i]])) < radius) {
                return true;
            }
        }
        return false;
    }
    const double diff = q[node.axis] - node.split;
    const std::int32_t near_side = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far_side = diff <= 0.0 ? node.right : node.left;
    if (any_within_impl(near_side, q, radius)) {
        return true;
    }
    return std::abs(diff) < radius && any_within_impl(far_side, q, radius);
}

std::vector<std::size_t> KdTree::within(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    if (!nodes_.empty()) {
        within_impl(0, q, radius, out);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void KdTree::within_impl(std::int32_t id, const Vec3& q, double radius,
                         std::vector<std::size_t>& out) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            if (std::sqrt(squared_distance(q, points_[order_[i]])) < radius) {
                out.push_back(order_[i]);
            }
        }
        return;
    }
    const double diff = q[node.axis] - node.split;
    if (diff < radius) {
        within_impl(node.left, q, radius, out);
    }
    if (-diff < radius) {
        within_impl(node.right, q, radius, out);
    }
}

std::vector<Neighbor> KdTree::k_nearest(const Vec3& q, std::size_t k, std::size_t exclude) const {
    std::vector<Neighbor> heap;
    if (nodes_.empty() || k == 0) {
        return heap;
    }
    heap.reserve(k + 1);
    k_nearest_impl(0, q, k, exclude, heap);
    std::sort(heap.begin(), heap.end(), closer);
    return heap;
}

void KdTree::k_nearest_impl(std::int32_t id, const Vec3& q, std::size_t k, std::size_t exclude,
                            std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            if (order_[i] == exclude) {
                continue;
            }
            const Neighbor cand{order_[i], squared_distance(q, points_[order_[i]])};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), closer);
            } else if (closer(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), closer);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), closer);
            }
        }
        return;
    }
    const double diff = q[node.axis] - node.split;
    const std::int32_t near_side = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far_side = diff <= 0.0 ? node.right : node.left;
    k_nearest_impl(near_side, q, k, exclude, heap);
    if (heap.size() < k || diff * diff <= heap.front().sq_distance) {
        k_nearest_impl(far_side, q, k, exclude, heap);
    }
}

}  // namespace bonsai

#include "bonsai/solid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "bonsai/error.hpp"

namespace bonsai {

namespace {

constexpr double kLabelSlack = 1e-9;

// Unit vector perpendicular to `dir`, from the x axis (y axis when x is
// nearly parallel to dir).
Vec3 seed_frame(const Vec3& dir) {
    Vec3 u = Vec3{1.0, 0.0, 0.0} - dir * dir.x;
    if (norm(u) < 1e-6) {
        u = Vec3{0.0, 1.0, 0.0} - dir * dir.y;
    }
    return normalized(u);
}

// Rotates u by the minimal rotation taking unit vector a onto unit vector b,
// then re-orthogonalizes against b.
Vec3 transport(const Vec3& u, const Vec3& a, const Vec3& b) {
    const double c = dot(a, b);
    Vec3 out = u;
    if (c > -1.0 + 1e-9) {
        const Vec3 k = cross(a, b);
        out = u * c + cross(k, u) + k * (dot(k, u) / (1.0 + c));
    }
    out -= b * dot(out, b);
    const double len = norm(out);
    return len < 1e-9 ? seed_frame(b) : out / len;
}

}  // namespace

double TubeMesh::face_area(std::size_t f) const {
    const Face& t = faces[f];
    return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

Vec3 TubeMesh::face_normal(std::size_t f) const {
    const Face& t = faces[f];
    const Vec3 n = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    const double len = norm(n);
    return len > 0.0 ? n / len : Vec3{};
}

double TubeMesh::total_area() const {
    double sum = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f) {
        sum += face_area(f);
    }
    return sum;
}

Skeleton compute_sizes(const Skeleton& skeleton, const SizingParams& sp) {
    validate_sizing(sp);
    Skeleton out = skeleton;
    const double ig = sp.inverted_growth;
    // Children always carry larger ids than their parent.
    for (std::size_t i = out.size(); i-- > 0;) {
        const BranchNode& node = out.node(i);
        if (node.children.empty()) {
            out.set_size(i, sp.extremity_size);
            continue;
        }
        double acc = 0.0;
        for (const NodeId c : node.children) {
            acc += std::pow(out.node(c).size, ig);
        }
        out.set_size(i, std::pow(acc, 1.0 / ig));
    }
    return out;
}

TubeMesh build_mesh(const Skeleton& skeleton, const SizingParams& sp) {
    validate_sizing(sp);
    if (!skeleton.is_sized()) {
        throw UnsizedSkeleton("skeleton has nodes without a positive size; run the sizing pass first");
    }
    const std::size_t n = skeleton.size();
    const auto segs = static_cast<std::uint32_t>(sp.ring_segments);

    std::vector<Vec3> frame(n);
    for (std::size_t i = 0; i < n; ++i) {
        const BranchNode& node = skeleton.node(i);
        frame[i] = node.parent ? transport(frame[*node.parent], skeleton.node(*node.parent).direction, node.direction)
                               : seed_frame(node.direction);
    }

    TubeMesh mesh;
    mesh.extremity_size = sp.extremity_size;
    mesh.vertices.reserve(n * segs);
    mesh.ring_of_node.resize(n);
    mesh.node_size.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const BranchNode& node = skeleton.node(i);
        const Vec3 u = frame[i];
        const Vec3 v = cross(node.direction, u);
        mesh.node_size[i] = node.size;
        auto& ring = mesh.ring_of_node[i];
        ring.reserve(segs);
        for (std::uint32_t k = 0; k < segs; ++k) {
            const double angle = 2.0 * std::numbers::pi * k / segs;
            ring.push_back(static_cast<std::uint32_t>(mesh.vertices.size()));
            mesh.vertices.push_back(node.position + (u * std::cos(angle) + v * std::sin(angle)) * node.size);
        }
    }

    mesh.faces.reserve(skeleton.branch_count() * segs * 2);
    mesh.face_node.reserve(skeleton.branch_count() * segs * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const BranchNode& node = skeleton.node(i);
        if (!node.parent) {
            continue;
        }
        const auto& lower = mesh.ring_of_node[*node.parent];
        const auto& upper = mesh.ring_of_node[i];
        for (std::uint32_t k = 0; k < segs; ++k) {
            const std::uint32_t k1 = (k + 1) % segs;
            mesh.faces.push_back({lower[k], lower[k1], upper[k1]});
            mesh.faces.push_back({lower[k], upper[k1], upper[k]});
            mesh.face_node.push_back(i);
            mesh.face_node.push_back(i);
        }
    }
    return mesh;
}

namespace {

SurfaceCloud sample_impl(const TubeMesh& mesh, double density, std::optional<std::size_t> fixed_count, Rng& rng) {
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += mesh.face_area(f);
        cumulative[f] = total;
    }
    if (mesh.faces.empty() || !(total > 0.0)) {
        throw EmptyMesh("mesh has no surface area to sample");
    }
    const auto count = fixed_count ? *fixed_count : static_cast<std::size_t>(std::llround(density * total));

    SurfaceCloud cloud;
    cloud.points.reserve(count);
    cloud.normals.reserve(count);
    cloud.source_face.reserve(count);
    cloud.labels.reserve(count);
    const bool labelled = mesh.face_node.size() == mesh.faces.size() && !mesh.node_size.empty();
    for (std::size_t s = 0; s < count; ++s) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) {
            --it;
        }
        const auto f = static_cast<std::size_t>(it - cumulative.begin());
        const Face& t = mesh.faces[f];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const double b0 = 1.0 - r1;
        const double b1 = r1 * (1.0 - r2);
        const double b2 = r1 * r2;
        cloud.points.push_back(mesh.vertices[t[0]] * b0 + mesh.vertices[t[1]] * b1 + mesh.vertices[t[2]] * b2);
        cloud.normals.push_back(mesh.face_normal(f));
        cloud.source_face.push_back(f);
        SurfaceLabel label = SurfaceLabel::trunk;
        if (labelled && mesh.node_size[mesh.face_node[f]] <= mesh.extremity_size * (1.0 + kLabelSlack)) {
            label = SurfaceLabel::extremity;
        }
        cloud.labels.push_back(label);
    }
    return cloud;
}

}  // namespace

SurfaceCloud sample_surface(const TubeMesh& mesh, double density, Rng& rng) {
    if (!(density > 0.0) || !std::isfinite(density)) {
        throw NonPositive("sampling density must be positive");
    }
    return sample_impl(mesh, density, std::nullopt, rng);
}

SurfaceCloud sample_surface_count(const TubeMesh& mesh, std::size_t count, Rng& rng) {
    return sample_impl(mesh, 0.0, count, rng);
}

}  // namespace bonsai

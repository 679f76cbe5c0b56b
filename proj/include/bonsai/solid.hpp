#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bonsai/model.hpp"
#include "bonsai/rng.hpp"
#include "bonsai/vec3.hpp"

namespace bonsai {

using Face = std::array<std::uint32_t, 3>;

/// Rings of S vertices around every node joined into tubes along each branch.
/// For a skeleton with N_b branches: (N_b + 1) * S vertices, N_b * S * 2 faces.
struct TubeMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<std::vector<std::uint32_t>> ring_of_node;
    std::vector<NodeId> face_node;  // branch (child node) that produced each face; empty for loaded meshes
    std::vector<double> node_size;
    double extremity_size = 0.0;

    double face_area(std::size_t f) const;
    Vec3 face_normal(std::size_t f) const;  // unit; zero for degenerate faces
    double total_area() const;
};

enum class SurfaceLabel : std::uint8_t { trunk = 0, extremity = 1 };

struct SurfaceCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<std::size_t> source_face;
    std::vector<SurfaceLabel> labels;

    std::size_t size() const { return points.size(); }
};

/// Branch sizes by the inverted growth model: extremities get r_e and every
/// other node (sum over children of size^I_g)^(1/I_g), children first.
Skeleton compute_sizes(const Skeleton& skeleton, const SizingParams& sp);

/// Throws UnsizedSkeleton if any node has size <= 0. Ring frames are
/// parallel-transported from the root so consecutive rings do not twist.
TubeMesh build_mesh(const Skeleton& skeleton, const SizingParams& sp);

/// round(density * area) points, faces drawn proportionally to area and
/// positions uniform inside each face. Throws EmptyMesh when the mesh has no
/// surface area.
SurfaceCloud sample_surface(const TubeMesh& mesh, double density, Rng& rng);

/// Same placement rule with an explicit point count.
SurfaceCloud sample_surface_count(const TubeMesh& mesh, std::size_t count, Rng& rng);

}  // namespace bonsai

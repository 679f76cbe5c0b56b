#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "bonsai/gaussian.hpp"
#include "bonsai/render.hpp"
#include "bonsai/solid.hpp"

namespace bonsai::io {

/// Whole-file read/write; both throw IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Wavefront OBJ: `v x y z` and `f a b c` records with 1-based indices.
std::string mesh_to_obj(const TubeMesh& mesh);
TubeMesh mesh_from_obj(std::string_view text);

/// ASCII PLY, vertex properties x y z nx ny nz label (0 trunk, 1 extremity).
std::string cloud_to_ply(const SurfaceCloud& cloud);
SurfaceCloud cloud_from_ply(std::string_view text);

/// ASCII PLY, vertex properties x y z sigma r g b opacity (isotropic splats).
std::string gaussians_to_ply(const GaussianCloud& cloud);
GaussianCloud gaussians_from_ply(std::string_view text);

/// Little-endian float PFM (scale -1), bottom row first; background is +inf.
std::string depth_to_pfm(const DepthImage& depth);
DepthImage depth_from_pfm(std::string_view bytes);

/// 16-bit binary PGM. 0 is background; hits map linearly onto 1..65535 with
/// the nearest depth brightest.
std::string depth_to_pgm16(const DepthImage& depth);

/// Binary PPM (P6), 8 bits per channel, values clamped to [0, 1].
std::string color_to_ppm(const ColorImage& color);

/// 8-bit PGM (P5) with foreground 255 and background 0.
std::string mask_to_pgm(const BinaryMask& mask);

/// Grayscale mask from PGM (P2/P5, 8 or 16 bit) or PNG bytes; samples above
/// the midpoint (127 for 8 bit) are foreground. Throws ParseError.
BinaryMask mask_from_bytes(std::string_view bytes);

}  // namespace bonsai::io

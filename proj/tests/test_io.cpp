#include <doctest.h>

#include <png.h>

#include <cmath>
#include <cstring>

#include "bonsai/error.hpp"
#include "bonsai/io.hpp"
#include "helpers.hpp"

using namespace bonsai;

namespace {

std::string png_bytes(std::size_t w, std::size_t h, const std::vector<std::uint8_t>& gray) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    REQUIRE(png_image_write_to_memory(&image, nullptr, &size, 0, gray.data(), 0, nullptr));
    std::string out(size, '\0');
    REQUIRE(png_image_write_to_memory(&image, out.data(), &size, 0, gray.data(), 0, nullptr));
    out.resize(size);
    return out;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("OBJ round trip") {
    Rng rng(2);
    const SizingParams sp{0.01, 2, 5};
    const auto mesh = build_mesh(compute_sizes(testing::random_tree(20, rng), sp), sp);
    const std::string text = io::mesh_to_obj(mesh);
    const auto back = io::mesh_from_obj(text);
    CHECK(back.faces == mesh.faces);
    REQUIRE(back.vertices.size() == mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        CHECK(distance(back.vertices[i], mesh.vertices[i]) < 1e-8);
    }
    CHECK(io::mesh_to_obj(back) == text);
    CHECK(text.find("\nf 1 2 ") != std::string::npos);  // 1-based
    CHECK_THROWS_AS(io::mesh_from_obj("v 0 0 0\nf 1 2 3\n"), ParseError);
}

TEST_CASE("surface cloud PLY round trip") {
    SurfaceCloud c;
    c.points = {{0.1, 0.2, 0.3}, {-1, 2, 5e-7}};
    c.normals = {{0, 0, 1}, {1, 0, 0}};
    c.source_face = {0, 0};
    c.labels = {SurfaceLabel::trunk, SurfaceLabel::extremity};
    const std::string text = io::cloud_to_ply(c);
    CHECK(text.find("element vertex 2\n") != std::string::npos);
    CHECK(text.find("property uchar label") != std::string::npos);
    const auto back = io::cloud_from_ply(text);
    CHECK(back.points == c.points);
    CHECK(back.labels == c.labels);
    CHECK_THROWS_AS(io::cloud_from_ply(text.substr(0, text.size() - 5)), ParseError);
}

TEST_CASE("gaussian PLY round trip") {
    GaussianCloud g;
    Splat s;
    s.mu = {1, 2, 3};
    s.cov = Mat3::scaled_identity(0.25);
    s.color = {0.5, 0.25, 0.125};
    s.opacity = 0.75;
    g.splats = {s, s};
    const auto back = io::gaussians_from_ply(io::gaussians_to_ply(g));
    REQUIRE(back.size() == 2);
    CHECK(back.splats[1].cov == s.cov);
    CHECK(back.splats[1].color == s.color);
    CHECK(back.splats[1].opacity == 0.75);
    CHECK(io::gaussians_from_ply(io::gaussians_to_ply(GaussianCloud{})).empty());
}

TEST_CASE("PFM keeps infinities and row order") {
    DepthImage d(3, 2);
    d.depth = {1.5, HUGE_VAL, 2.0, 3.0, 4.0, HUGE_VAL};
    const std::string bytes = io::depth_to_pfm(d);
    CHECK(bytes.rfind("Pf\n3 2\n-1.0\n", 0) == 0);
    const auto back = io::depth_from_pfm(bytes);
    CHECK(back.depth == d.depth);
    float first = 0;
    std::memcpy(&first, bytes.data() + std::strlen("Pf\n3 2\n-1.0\n"), 4);
    CHECK(first == 3.0f);  // bottom row first
}

TEST_CASE("16-bit depth PGM maps background to zero and near to bright") {
    DepthImage d(3, 1);
    d.depth = {2.0, 4.0, HUGE_VAL};
    const std::string bytes = io::depth_to_pgm16(d);
    const std::string header = "P5\n3 1\n65535\n";
    REQUIRE(bytes.size() == header.size() + 6);
    auto px = [&](int i) {
        return (static_cast<unsigned char>(bytes[header.size() + 2 * i]) << 8) |
               static_cast<unsigned char>(bytes[header.size() + 2 * i + 1]);
    };
    CHECK(px(0) == 65535);
    CHECK(px(1) == 1);
    CHECK(px(2) == 0);
}

TEST_CASE("mask readers accept PGM and PNG") {
    BinaryMask m(4, 3);
    m.pixels = {0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 1};
    CHECK(io::mask_from_bytes(io::mask_to_pgm(m)).pixels == m.pixels);
    CHECK(io::mask_from_bytes("P2\n# comment\n4 3\n255\n0 200 255 0\n0 128 0 0\n255 255 255 255\n").pixels == m.pixels);

    std::vector<std::uint8_t> gray(12);
    for (std::size_t i = 0; i < 12; ++i) {
        gray[i] = m.pixels[i] ? 200 : 127;  // 127 is background
    }
    const auto png = io::mask_from_bytes(png_bytes(4, 3, gray));
    CHECK(png.width == 4);
    CHECK(png.pixels == m.pixels);
}

TEST_CASE("corrupt masks are parse errors") {
    CHECK_THROWS_AS(io::mask_from_bytes(""), ParseError);
    CHECK_THROWS_AS(io::mask_from_bytes("hello"), ParseError);
    CHECK_THROWS_AS(io::mask_from_bytes("P5\n4 4\n255\nab"), ParseError);
    std::string png = png_bytes(2, 2, {0, 255, 255, 0});
    CHECK_THROWS_AS(io::mask_from_bytes(png.substr(0, png.size() / 2)), ParseError);
}

TEST_CASE("file helpers report I/O errors") {
    testing::TempDir dir;
    io::write_file(dir.path() / "a.txt", "abc");
    CHECK(io::read_file(dir.path() / "a.txt") == "abc");
    CHECK_THROWS_AS(io::read_file(dir.path() / "missing.txt"), IoError);
    CHECK_THROWS_AS(io::write_file(dir.path() / "no" / "such" / "dir.txt", "x"), IoError);
}

}

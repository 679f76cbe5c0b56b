#include <doctest.h>

#include <sstream>

#include "bonsai/cli.hpp"
#include "bonsai/io.hpp"
#include "helpers.hpp"

using namespace bonsai;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const char* kSmallConfig = R"(seed = 5
[growth]
attractors = 200
step = 0.05
kill_distance = 0.15
influence_distance = 0.4
[render]
width = 24
height = 24
[fit]
resolution = 32
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("grow is deterministic and prints a summary") {
    testing::TempDir dir;
    io::write_file(dir.path() / "c.toml", kSmallConfig);
    const auto a = run({"grow", "--config", dir.str("c.toml"), "--out", dir.str("a")});
    const auto b = run({"grow", "--config", dir.str("c.toml"), "--out", dir.str("b")});
    REQUIRE(a.code == 0);
    CHECK(a.out.find("nodes ") != std::string::npos);
    CHECK(a.out.find("attractors 200") != std::string::npos);
    CHECK(io::read_file(dir.path() / "a" / "skeleton.json") == io::read_file(dir.path() / "b" / "skeleton.json"));
    CHECK(fs::exists(dir.path() / "a" / "growth_trace.csv"));
    const auto c = run({"grow", "--config", dir.str("c.toml"), "--seed", "6", "--out", dir.str("c")});
    CHECK(io::read_file(dir.path() / "a" / "skeleton.json") != io::read_file(dir.path() / "c" / "skeleton.json"));
}

TEST_CASE("exit codes follow the contract") {
    testing::TempDir dir;
    CHECK(run({"grow", "--config", dir.str("missing.toml")}).code == 1);
    io::write_file(dir.path() / "bad.toml", "[growth]\nkill_distance = 0.5\n");
    const auto bad = run({"grow", "--config", dir.str("bad.toml"), "--out", dir.str("o")});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("kill distance must be less than the influence distance") != std::string::npos);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"mesh", "--in", dir.str("nothing.json"), "--out", dir.str("m.obj")}).code == 1);
    io::write_file(dir.path() / "junk.json", "{\"nodes\":");
    CHECK(run({"mesh", "--in", dir.str("junk.json"), "--out", dir.str("m.obj")}).code == 2);
}

TEST_CASE("help documents every config key") {
    const auto h = run({"--help"});
    CHECK(h.code == 0);
    for (const char* key : {"influence_distance", "extremity_size", "density", "trunk_color", "distance_max",
                            "step_sigma", "BONSAI_THREADS"}) {
        CHECK_MESSAGE(h.out.find(key) != std::string::npos, key);
    }
}

TEST_CASE("mesh counts for an 11-node skeleton with six segments") {
    testing::TempDir dir;
    GrowthParams params;
    auto s = Skeleton::with_root({0, 0, 0}, {0, 0, 1}, params);
    for (int i = 1; i <= 10; ++i) {
        s.add_child(static_cast<NodeId>(i - 1), {0, 0, 0.03 * i}, {0, 0, 1});
    }
    io::write_file(dir.path() / "s.json", serialize_skeleton(s));
    const auto unsized = run({"mesh", "--in", dir.str("s.json"), "--out", dir.str("m.obj")});
    CHECK(unsized.code == 2);
    const auto r = run({"mesh", "--in", dir.str("s.json"), "--auto-size", "--segments", "6", "--out", dir.str("m.obj")});
    REQUIRE(r.code == 0);
    CHECK(r.out == "vertices 66\nfaces 120\n");
    const auto mesh = io::mesh_from_obj(io::read_file(dir.path() / "m.obj"));
    CHECK(mesh.vertices.size() == 66);
    CHECK(mesh.faces.size() == 120);

    // A sized skeleton needs no flag.
    io::write_file(dir.path() / "sized.json", serialize_skeleton(compute_sizes(s, SizingParams{})));
    CHECK(run({"mesh", "--in", dir.str("sized.json"), "--out", dir.str("m2.obj")}).code == 0);
}

TEST_CASE("sample, gaussians and render chain") {
    testing::TempDir dir;
    io::write_file(dir.path() / "c.toml", kSmallConfig);
    REQUIRE(run({"grow", "--config", dir.str("c.toml"), "--out", dir.str("g")}).code == 0);
    const std::string skel = (dir.path() / "g" / "skeleton.json").string();
    CHECK(run({"sample", "--in", skel, "--out", dir.str("c.ply")}).code == 2);
    const auto s = run({"sample", "--in", skel, "--auto-size", "--count", "10000", "--out", dir.str("c.ply")});
    REQUIRE(s.code == 0);
    CHECK(io::cloud_from_ply(io::read_file(dir.path() / "c.ply")).size() == 10000);
    CHECK(run({"gaussians", "--in", dir.str("c.ply"), "--out", dir.str("g.ply")}).code == 0);

    const auto r = run({"render", "--in", dir.str("g.ply"), "--out", dir.str("r"), "--width", "20", "--height", "16"});
    REQUIRE(r.code == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "r")) {
        (void)e;
        ++files;
    }
    CHECK(files == 8);
    for (int i = 0; i < 4; ++i) {
        CHECK(fs::exists(dir.path() / "r" / ("view" + std::to_string(i) + "_color.ppm")));
        CHECK(fs::exists(dir.path() / "r" / ("view" + std::to_string(i) + "_depth.pfm")));
    }
    REQUIRE(run({"render", "--in", dir.str("g.ply"), "--out", dir.str("r2"), "--width", "20", "--height", "16"})
                .code == 0);
    CHECK(io::read_file(dir.path() / "r" / "view2_depth.pfm") == io::read_file(dir.path() / "r2" / "view2_depth.pfm"));
    CHECK(io::read_file(dir.path() / "r" / "view2_color.ppm") == io::read_file(dir.path() / "r2" / "view2_color.ppm"));

    CHECK(run({"render", "--in", dir.str("g.ply"), "--out", dir.str("bad"), "--fov", "0"}).code == 2);
    CHECK(run({"render", "--in", dir.str("g.ply"), "--out", dir.str("bad"), "--views", "0"}).code == 2);
}

TEST_CASE("render of an empty cloud is background only") {
    testing::TempDir dir;
    io::write_file(dir.path() / "e.ply", io::gaussians_to_ply(GaussianCloud{}));
    REQUIRE(run({"render", "--in", dir.str("e.ply"), "--views", "1", "--width", "8", "--height", "8", "--out",
                 dir.str("r")})
                .code == 0);
    const auto d = io::depth_from_pfm(io::read_file(dir.path() / "r" / "view0_depth.pfm"));
    for (const double v : d.depth) {
        CHECK(std::isinf(v));
    }
}

TEST_CASE("fit skips corrupt masks and needs at least one valid one") {
    testing::TempDir dir;
    io::write_file(dir.path() / "c.toml", kSmallConfig);
    fs::create_directories(dir.path() / "masks");
    BinaryMask m(16, 16);
    for (std::size_t y = 4; y < 14; ++y) {
        m.pixels[y * 16 + 8] = 1;
    }
    io::write_file(dir.path() / "masks" / "a.pgm", io::mask_to_pgm(m));
    io::write_file(dir.path() / "masks" / "b.png", "definitely not a png");

    const auto r = run({"fit", "--masks", dir.str("masks"), "--config", dir.str("c.toml"), "--budget", "1", "--out",
                        dir.str("fit")});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("skipping mask 'b.png'") != std::string::npos);
    CHECK(r.out.find("masks 1\n") != std::string::npos);
    CHECK(r.out.find("theta 1 0 0 0\n") != std::string::npos);
    CHECK(fs::exists(dir.path() / "fit" / "best_theta.json"));
    CHECK(fs::exists(dir.path() / "fit" / "fit_trace.csv"));

    fs::remove(dir.path() / "masks" / "a.pgm");
    CHECK(run({"fit", "--masks", dir.str("masks"), "--config", dir.str("c.toml"), "--out", dir.str("fit2")}).code ==
          2);
}

}

#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "bonsai/attractors.hpp"
#include "bonsai/model.hpp"
#include "bonsai/rng.hpp"

namespace testing {

inline const std::filesystem::path kFixtures = BONSAI_FIXTURE_DIR;

// Tree with `n` nodes; each new node hangs off a uniformly chosen earlier node.
inline bonsai::Skeleton random_tree(std::size_t n, bonsai::Rng& rng, double step = 0.03) {
    bonsai::GrowthParams params;
    params.step = step;
    auto skel = bonsai::Skeleton::with_root({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, params);
    for (std::size_t i = 1; i < n; ++i) {
        const auto parent = static_cast<bonsai::NodeId>(rng.below(i));
        const bonsai::Vec3 dir = bonsai::random_unit_vector(rng);
        skel.add_child(parent, skel.node(parent).position + dir * step, dir);
    }
    return skel;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("bonsai_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testing

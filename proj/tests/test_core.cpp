#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <vector>

#include "bonsai/parallel.hpp"
#include "bonsai/rng.hpp"
#include "bonsai/spatial.hpp"

using namespace bonsai;

TEST_SUITE("core") {

TEST_CASE("rng streams are reproducible and named streams differ") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(substream_seed(42, "attractors") != substream_seed(42, "sampling"));
    CHECK(substream_seed(42, "cameras") != substream_seed(43, "cameras"));
    CHECK(substream_seed(42, "fitting") == substream_seed(42, "fitting"));
}

TEST_CASE("rng uniform and below stay in range") {
    Rng r(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(r.below(7) < 7);
    }
}

TEST_CASE("normal deviates have unit moments") {
    Rng r(9);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("parallel_for covers every index exactly once") {
    for (std::size_t workers : {1u, 2u, 5u}) {
        set_worker_count(workers);
        for (std::size_t n : {0u, 1u, 7u, 1000u}) {
            std::vector<int> hits(n, 0);
            parallel_for(n, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    ++hits[i];
                }
            });
            CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
        }
    }
    set_worker_count(0);
}

TEST_CASE("parallel_for rethrows body exceptions") {
    set_worker_count(3);
    CHECK_THROWS_AS(parallel_for(100,
                                 [](std::size_t b, std::size_t e) {
                                     if (b <= 50 && 50 < e) {
                                         throw std::runtime_error("boom");
                                     }
                                 }),
                    std::runtime_error);
    set_worker_count(0);
}

TEST_CASE("kd-tree queries agree with brute force") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.below(300);
        std::vector<Vec3> pts(n);
        for (auto& p : pts) {
            // Coarse grid so distance ties actually occur.
            p = {std::round(rng.uniform(-5, 5)), std::round(rng.uniform(-5, 5)), std::round(rng.uniform(-5, 5))};
        }
        const KdTree tree(pts);
        for (int q = 0; q < 50; ++q) {
            const Vec3 query{std::round(rng.uniform(-6, 6)), std::round(rng.uniform(-6, 6)),
                             std::round(rng.uniform(-6, 6))};
            const double radius = std::round(rng.uniform(0, 4));
            std::vector<Neighbor> all;
            for (std::size_t i = 0; i < n; ++i) {
                all.push_back({i, squared_distance(pts[i], query)});
            }
            std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
                return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.index < b.index);
            });

            const auto nn = tree.nearest(query);
            REQUIRE(nn.has_value());
            CHECK(nn->index == all[0].index);

            const auto bounded = tree.nearest(query, radius);
            const bool expect = std::sqrt(all[0].sq_distance) < radius;
            CHECK(bounded.has_value() == expect);
            CHECK(tree.any_within(query, radius) == expect);

            std::vector<std::size_t> inside;
            for (std::size_t i = 0; i < n; ++i) {
                if (distance(pts[i], query) < radius) {
                    inside.push_back(i);
                }
            }
            CHECK(tree.within(query, radius) == inside);

            const std::size_t k = 1 + rng.below(5);
            const std::size_t skip = rng.below(n);
            std::vector<std::size_t> want;
            for (const auto& a : all) {
                if (a.index != skip && want.size() < k) {
                    want.push_back(a.index);
                }
            }
            std::vector<std::size_t> got;
            for (const auto& nb : tree.k_nearest(query, k, skip)) {
                got.push_back(nb.index);
            }
            CHECK(got == want);
        }
    }
}

TEST_CASE("empty kd-tree answers nothing") {
    const KdTree tree(std::vector<Vec3>{});
    CHECK_FALSE(tree.nearest({0, 0, 0}).has_value());
    CHECK_FALSE(tree.any_within({0, 0, 0}, 10.0));
    CHECK(tree.within({0, 0, 0}, 10.0).empty());
}

}

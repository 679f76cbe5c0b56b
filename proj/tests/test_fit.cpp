#include <doctest.h>

#include <cmath>

#include "bonsai/config.hpp"
#include "bonsai/error.hpp"
#include "bonsai/fit.hpp"
#include "bonsai/io.hpp"
#include "helpers.hpp"

using namespace bonsai;

namespace {

FitProblem small_problem() {
    FitProblem p;
    p.base.n_attractors = 300;
    p.base.step = 0.05;
    p.base.kill_distance = 0.15;
    p.base.influence_distance = 0.4;
    p.sizing.extremity_size = 0.02;
    p.rig.width = p.rig.height = 48;
    return p;
}

// Integer-exact recomputation: scaling heights by 16 (profile) and 4 (trunk)
// turns every row/bin overlap into a whole number.
SilhouetteStats counting_oracle(const BinaryMask& m) {
    long top = -1, bottom = -1, left = -1, right = -1;
    long total = 0;
    for (std::size_t y = 0; y < m.height; ++y) {
        for (std::size_t x = 0; x < m.width; ++x) {
            if (m.at(x, y)) {
                if (top < 0) {
                    top = static_cast<long>(y);
                }
                bottom = static_cast<long>(y);
                left = left < 0 ? static_cast<long>(x) : std::min(left, static_cast<long>(x));
                right = std::max(right, static_cast<long>(x));
                ++total;
            }
        }
    }
    const long h = bottom - top + 1;
    const long w = right - left + 1;
    SilhouetteStats s;
    s.aspect_ratio = static_cast<double>(h) / static_cast<double>(w);
    s.fill_ratio = static_cast<double>(total) / static_cast<double>(h * w);
    std::array<long, 16> prof{};
    long trunk = 0;
    for (long y = top; y <= bottom; ++y) {
        long count = 0;
        for (std::size_t x = 0; x < m.width; ++x) {
            count += m.at(x, static_cast<std::size_t>(y)) ? 1 : 0;
        }
        const long lo = bottom - y;
        for (long b = 0; b < 16; ++b) {
            const long ov = std::max(0L, std::min(16 * lo + 16, (b + 1) * h) - std::max(16 * lo, b * h));
            prof[b] += ov * count;
        }
        trunk += std::max(0L, std::min(4 * lo + 4, h) - 4 * lo) * count;
    }
    for (int b = 0; b < 16; ++b) {
        s.vertical_profile[b] = static_cast<double>(prof[b]) / static_cast<double>(h * w);
    }
    s.trunk_fraction = static_cast<double>(trunk) / static_cast<double>(4 * total);
    return s;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("full square silhouette") {
    for (std::size_t n : {1u, 4u, 7u, 64u}) {
        BinaryMask m(n, n);
        std::fill(m.pixels.begin(), m.pixels.end(), 1);
        const auto s = stats_from_mask(m);
        CHECK(s.aspect_ratio == 1.0);
        CHECK(s.fill_ratio == 1.0);
        CHECK(s.trunk_fraction == doctest::Approx(0.25).epsilon(1e-14));
        for (const double p : s.vertical_profile) {
            CHECK(p == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("single column silhouette") {
    BinaryMask m(5, 20);
    for (std::size_t y = 0; y < 20; ++y) {
        m.pixels[y * 5 + 2] = 1;
    }
    const auto s = stats_from_mask(m);
    CHECK(s.fill_ratio == 1.0);
    CHECK(s.aspect_ratio == 20.0);
}

TEST_CASE("empty masks are rejected") {
    CHECK_THROWS_AS(stats_from_mask(BinaryMask(4, 4)), EmptyForeground);
    CHECK_THROWS_AS(stats_from_mask(BinaryMask{}), ValidationError);
}

TEST_CASE("stats match the counting oracle on random masks") {
    Rng rng(606);
    for (int t = 0; t < 200; ++t) {
        BinaryMask m(1 + rng.below(40), 1 + rng.below(40));
        const double density = rng.uniform(0.05, 0.9);
        for (auto& p : m.pixels) {
            p = rng.uniform() < density ? 1 : 0;
        }
        m.pixels[rng.below(m.pixels.size())] = 1;
        const auto got = stats_from_mask(m);
        const auto want = counting_oracle(m);
        CHECK(got.aspect_ratio == want.aspect_ratio);
        CHECK(got.fill_ratio == want.fill_ratio);
        CHECK(std::abs(got.trunk_fraction - want.trunk_fraction) < 1e-12);
        double sum = 0.0;
        for (std::size_t b = 0; b < 16; ++b) {
            CHECK(std::abs(got.vertical_profile[b] - want.vertical_profile[b]) < 1e-12);
            CHECK(got.vertical_profile[b] >= 0.0);
            CHECK(got.vertical_profile[b] <= 1.0 + 1e-12);
            sum += got.vertical_profile[b];
        }
        CHECK(sum <= 16.0 + 1e-9);
    }
}

TEST_CASE("self-target loss is exactly zero and loss is non-negative") {
    const FitProblem p = small_problem();
    const Theta theta{1.0, 1.5, 2.0, 0.0};
    const auto targets = render_stats(theta, p);
    REQUIRE(targets.size() == 4);
    CHECK(loss(theta, targets, p) == 0.0);
    CHECK(loss({1.0, 0.0, 0.0, 0.0}, targets, p) >= 0.0);
    CHECK_THROWS_AS(loss(theta, {}, p), ValidationError);
}

TEST_CASE("hidden parameters score better than large perturbations") {
    const FitProblem p = small_problem();
    Rng rng(77);
    int wins = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Theta star{1.0, rng.uniform(0, 4), rng.uniform(0, 4), 0.0};
        const auto targets = render_stats(star, p);
        Theta far = star;
        far[1] = star[1] >= 2 ? star[1] - 3.0 : star[1] + 3.0;
        far[2] = star[2] >= 2 ? star[2] - 3.0 : star[2] + 3.0;
        wins += loss(star, targets, p) < loss(far, targets, p) ? 1 : 0;
    }
    CHECK(wins >= 8);
}

TEST_CASE("fit with a budget of one returns the initial theta") {
    FitConfig cfg;
    cfg.problem = small_problem();
    cfg.budget = 1;
    cfg.theta_init = {1.0, 0.5, 0.5, 0.0};
    const auto targets = render_stats({1.0, 2.0, 2.0, 0.0}, cfg.problem);
    const auto r = fit(cfg, targets);
    CHECK(r.theta_best == cfg.theta_init);
    CHECK(r.trace.size() == 1);
    CHECK(r.best_loss == r.initial_loss);
    CHECK(r.initial_loss == loss(cfg.theta_init, targets, cfg.problem));
}

TEST_CASE("fit traces are monotone, bounded and reproducible") {
    FitConfig cfg;
    cfg.problem = small_problem();
    cfg.budget = 25;
    cfg.step_sigma = 2.0;
    const auto targets = render_stats({1.0, 2.0, 3.0, 0.0}, cfg.problem);
    const auto r = fit(cfg, targets);
    REQUIRE(r.trace.size() == 25);
    double last = r.trace.front().best_loss;
    for (const auto& e : r.trace) {
        CHECK(e.best_loss <= last);
        last = e.best_loss;
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(e.theta[i] >= cfg.theta_lo[i]);
            CHECK(e.theta[i] <= cfg.theta_hi[i]);
        }
        if (e.accepted) {
            CHECK(e.loss == e.best_loss);
        }
    }
    CHECK(r.best_loss == last);
    const auto again = fit(cfg, targets);
    CHECK(again.trace_csv() == r.trace_csv());
    CHECK(again.best_json() == r.best_json());
    CHECK(r.trace_csv().rfind("evaluation,omega,falloff,tropism,reserved,loss,accepted,best_loss,sigma\n", 0) == 0);
}

TEST_CASE("fit config validation") {
    FitConfig cfg;
    cfg.theta_init[1] = 9.0;
    CHECK_THROWS_AS(cfg.validate(), OrderingViolation);
    cfg = {};
    cfg.budget = 0;
    CHECK_THROWS_AS(cfg.validate(), NonPositive);
}

TEST_CASE("bundled recovery masks are the renders of the hidden parameters") {
    const auto cfg = load_config(testing::kFixtures / "recovery" / "config.toml");
    const auto masks = render_silhouettes({1.0, 2.0, 3.0, 0.0}, cfg.fit_config().problem);
    REQUIRE(masks.size() == 4);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto file = testing::kFixtures / "recovery" / "masks" / ("view" + std::to_string(i) + "_mask.pgm");
        CHECK(io::read_file(file) == io::mask_to_pgm(masks[i]));
    }
}

}

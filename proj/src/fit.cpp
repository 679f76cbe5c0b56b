#include "bonsai/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bonsai/attractors.hpp"
#include "bonsai/colonization.hpp"
#include "bonsai/error.hpp"
#include "bonsai/rng.hpp"
#include "bonsai/solid.hpp"

namespace bonsai {

namespace {

constexpr double kStdFloor = 1e-3;

// Length of [a0, a1] intersected with [b0, b1].
double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

}  // namespace

std::array<double, SilhouetteStats::kComponents> SilhouetteStats::to_vector() const {
    std::array<double, kComponents> v{};
    v[0] = aspect_ratio;
    v[1] = fill_ratio;
    std::copy(vertical_profile.begin(), vertical_profile.end(), v.begin() + 2);
    v[kComponents - 1] = trunk_fraction;
    return v;
}

SilhouetteStats stats_from_mask(const BinaryMask& mask) {
    if (mask.width == 0 || mask.height == 0 || mask.pixels.size() != mask.width * mask.height) {
        throw ValidationError("mask image is empty");
    }
    std::size_t r0 = mask.height, r1 = 0, c0 = mask.width, c1 = 0;
    std::vector<std::size_t> row_count(mask.height, 0);
    std::size_t total = 0;
    for (std::size_t y = 0; y < mask.height; ++y) {
        for (std::size_t x = 0; x < mask.width; ++x) {
            if (mask.at(x, y)) {
                ++row_count[y];
                r0 = std::min(r0, y);
                r1 = std::max(r1, y);
                c0 = std::min(c0, x);
                c1 = std::max(c1, x);
            }
        }
        total += row_count[y];
    }
    if (total == 0) {
        throw EmptyForeground("mask has no foreground pixels");
    }
    const double h = static_cast<double>(r1 - r0 + 1);
    const double w = static_cast<double>(c1 - c0 + 1);

    SilhouetteStats s;
    s.aspect_ratio = h / w;
    s.fill_ratio = static_cast<double>(total) / (h * w);
    const double bin_height = h / static_cast<double>(SilhouetteStats::kBins);
    const double trunk_top = 0.25 * h;
    double trunk = 0.0;
    for (std::size_t y = r0; y <= r1; ++y) {
        // Height above the bottom edge of the box, so row r1 spans [0, 1].
        const double lo = static_cast<double>(r1 - y);
        const double count = static_cast<double>(row_count[y]);
        for (std::size_t b = 0; b < SilhouetteStats::kBins; ++b) {
            const double ov = overlap(lo, lo + 1.0, b * bin_height, (b + 1) * bin_height);
            if (ov > 0.0) {
                s.vertical_profile[b] += ov * count;
            }
        }
        trunk += overlap(lo, lo + 1.0, 0.0, trunk_top) * count;
    }
    for (double& p : s.vertical_profile) {
        p /= bin_height * w;
    }
    s.trunk_fraction = trunk / static_cast<double>(total);
    return s;
}

std::vector<BinaryMask> render_silhouettes(const Theta& theta, const FitProblem& problem) {
    GrowthParams params = problem.base;
    params.weights = GrowthWeights::from_array(theta);
    const GrowthResult grown = generate(params);
    const Skeleton sized = compute_sizes(grown.skeleton, problem.sizing);
    const TubeMesh mesh = build_mesh(sized, problem.sizing);

    const Aabb box = sized.bounds();
    Rng cam_rng = substream(params.seed, "cameras");
    const auto cams = default_camera_rig(box.center(), std::max(box.half_diagonal(), params.step), problem.rig, cam_rng);
    std::vector<BinaryMask> masks;
    for (const auto& v : render_mesh(mesh, cams)) {
        masks.push_back(mask_from_depth(v.depth));
    }
    return masks;
}

std::vector<SilhouetteStats> render_stats(const Theta& theta, const FitProblem& problem) {
    std::vector<SilhouetteStats> out;
    for (const auto& m : render_silhouettes(theta, problem)) {
        out.push_back(stats_from_mask(m));
    }
    return out;
}

TargetSummary summarize(const std::vector<SilhouetteStats>& stats) {
    if (stats.empty()) {
        throw ValidationError("at least one target silhouette is required");
    }
    TargetSummary t;
    const double n = static_cast<double>(stats.size());
    for (const auto& s : stats) {
        const auto v = s.to_vector();
        for (std::size_t k = 0; k < v.size(); ++k) {
            t.mean[k] += v[k];
        }
    }
    for (double& m : t.mean) {
        m /= n;
    }
    for (const auto& s : stats) {
        const auto v = s.to_vector();
        for (std::size_t k = 0; k < v.size(); ++k) {
            t.stddev[k] += (v[k] - t.mean[k]) * (v[k] - t.mean[k]);
        }
    }
    for (double& sd : t.stddev) {
        sd = std::sqrt(sd / n);
    }
    return t;
}

double stats_loss(const std::vector<SilhouetteStats>& rendered, const TargetSummary& targets) {
    // Averaging the rendered views the same way as the targets makes a
    // self-target score exactly zero.
    const TargetSummary avg = summarize(rendered);
    double acc = 0.0;
    for (std::size_t k = 0; k < SilhouetteStats::kComponents; ++k) {
        const double z = (avg.mean[k] - targets.mean[k]) / std::max(targets.stddev[k], kStdFloor);
        acc += z * z;
    }
    return acc / static_cast<double>(SilhouetteStats::kComponents);
}

double loss(const Theta& theta, const std::vector<SilhouetteStats>& targets, const FitProblem& problem) {
    const TargetSummary summary = summarize(targets);
    return stats_loss(render_stats(theta, problem), summary);
}

void FitConfig::validate() const {
    for (std::size_t i = 0; i < theta_init.size(); ++i) {
        if (!(theta_lo[i] <= theta_init[i] && theta_init[i] <= theta_hi[i])) {
            throw OrderingViolation("fit bounds must satisfy theta_lo <= theta_init <= theta_hi (coordinate " +
                                    std::to_string(i) + ")");
        }
    }
    if (budget < 1) {
        throw NonPositive("fit budget must be at least 1 evaluation");
    }
    if (!(step_sigma > 0.0)) {
        throw NonPositive("fit step_sigma must be positive");
    }
    if (theta_lo[0] <= 0.0) {
        throw NonPositive("omega lower bound must be positive");
    }
}

FitResult fit(const FitConfig& cfg, const std::vector<SilhouetteStats>& targets) {
    cfg.validate();
    const TargetSummary summary = summarize(targets);
    auto evaluate = [&](const Theta& th) { return stats_loss(render_stats(th, cfg.problem), summary); };

    Rng rng = substream(cfg.seed, "fitting");
    FitResult result;
    Theta current = cfg.theta_init;
    double current_loss = evaluate(current);
    double sigma = cfg.step_sigma;
    result.initial_loss = current_loss;
    result.trace.push_back({1, current, current_loss, true, current_loss, 0.0});

    // One-fifth rule: success multiplies sigma by exp(1/3), failure by
    // exp(-1/12), which is stationary at a 20% acceptance rate.
    const double grow_factor = std::exp(1.0 / 3.0);
    const double shrink_factor = std::exp(-1.0 / 12.0);
    double widest = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
        widest = std::max(widest, cfg.theta_hi[i] - cfg.theta_lo[i]);
    }
    const double sigma_max = std::max(widest, cfg.step_sigma);
    const double sigma_min = 1e-6 * cfg.step_sigma;

    for (std::size_t e = 2; e <= cfg.budget; ++e) {
        Theta proposal = current;
        for (std::size_t i = 0; i < proposal.size(); ++i) {
            const double step = sigma * rng.normal();
            proposal[i] = std::clamp(current[i] + step, cfg.theta_lo[i], cfg.theta_hi[i]);
        }
        const double l = evaluate(proposal);
        const bool accept = l <= current_loss;
        const double used_sigma = sigma;
        if (accept) {
            current = proposal;
            current_loss = l;
            sigma = std::min(sigma * grow_factor, sigma_max);
        } else {
            sigma = std::max(sigma * shrink_factor, sigma_min);
        }
        result.trace.push_back({e, proposal, l, accept, current_loss, used_sigma});
    }
    result.theta_best = current;
    result.best_loss = current_loss;
    return result;
}

std::string FitResult::trace_csv() const {
    std::ostringstream out;
    out << "evaluation,omega,falloff,tropism,reserved,loss,accepted,best_loss,sigma\n";
    for (const auto& t : trace) {
        out << t.evaluation;
        for (const double v : t.theta) {
            out << ',' << format_number(v);
        }
        out << ',' << format_number(t.loss) << ',' << (t.accepted ? 1 : 0) << ',' << format_number(t.best_loss)
            << ',' << format_number(t.sigma) << '\n';
    }
    return out.str();
}

std::string FitResult::best_json() const {
    std::ostringstream out;
    out << "{\n\"best_loss\":" << format_number(best_loss) << ",\n\"evaluations\":" << trace.size()
        << ",\n\"initial_loss\":" << format_number(initial_loss) << ",\n\"theta\":[";
    for (std::size_t i = 0; i < theta_best.size(); ++i) {
        out << (i ? "," : "") << format_number(theta_best[i]);
    }
    out << "]\n}\n";
    return out.str();
}

}  // namespace bonsai

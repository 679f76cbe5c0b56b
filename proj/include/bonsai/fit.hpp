#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bonsai/model.hpp"
#include "bonsai/render.hpp"

namespace bonsai {

using Theta = std::array<double, 4>;

/// Shape descriptors of one binary silhouette, measured inside the
/// foreground bounding box. Profile bin 0 is the bottom sixteenth of the
/// box; rows straddling a bin boundary contribute in proportion to overlap.
struct SilhouetteStats {
    static constexpr std::size_t kBins = 16;
    static constexpr std::size_t kComponents = kBins + 3;

    double aspect_ratio = 0.0;  // box height / box width
    double fill_ratio = 0.0;    // foreground / box area
    std::array<double, kBins> vertical_profile{};
    double trunk_fraction = 0.0;  // share of foreground in the bottom quarter of the box

    /// (aspect, fill, profile..., trunk)
    std::array<double, kComponents> to_vector() const;
};

/// Throws ValidationError for an empty image and EmptyForeground when no
/// pixel is set.
SilhouetteStats stats_from_mask(const BinaryMask& mask);

/// Everything a loss evaluation holds fixed while theta varies.
struct FitProblem {
    GrowthParams base;  // base.seed drives attractors and cameras
    SizingParams sizing;
    RigSettings rig{4, 2.5, 4.0, 40.0, 96, 96};
};

/// Mesh silhouettes of the tree grown with `theta`, one per rig view. The
/// rig is drawn from the "cameras" stream of base.seed and framed on the
/// skeleton bounding box.
std::vector<BinaryMask> render_silhouettes(const Theta& theta, const FitProblem& problem);

/// stats_from_mask of each render_silhouettes view.
std::vector<SilhouetteStats> render_stats(const Theta& theta, const FitProblem& problem);

/// Per-component mean and population standard deviation of a target set.
struct TargetSummary {
    std::array<double, SilhouetteStats::kComponents> mean{};
    std::array<double, SilhouetteStats::kComponents> stddev{};
};
TargetSummary summarize(const std::vector<SilhouetteStats>& stats);

/// Mean over components of ((view-averaged stat - target mean) / max(target std, 1e-3))^2.
double stats_loss(const std::vector<SilhouetteStats>& rendered, const TargetSummary& targets);

/// Renders `theta` and scores it against `targets` (non-empty).
double loss(const Theta& theta, const std::vector<SilhouetteStats>& targets, const FitProblem& problem);

struct FitConfig {
    Theta theta_init{1.0, 0.0, 0.0, 0.0};
    Theta theta_lo{0.1, 0.0, 0.0, 0.0};
    Theta theta_hi{4.0, 8.0, 8.0, 0.0};
    double step_sigma = 1.0;
    std::size_t budget = 200;
    std::uint64_t seed = 1;  // proposal noise only; growth uses problem.base.seed
    FitProblem problem;

    /// Throws ValidationError unless lo <= init <= hi, budget >= 1 and
    /// step_sigma > 0.
    void validate() const;
};

struct FitEvaluation {
    std::size_t evaluation = 0;  // 1-based
    Theta theta{};
    double loss = 0.0;
    bool accepted = false;
    double best_loss = 0.0;  // after this evaluation
    double sigma = 0.0;      // step size used for the proposal
};

struct FitResult {
    Theta theta_best{};
    double initial_loss = 0.0;
    double best_loss = 0.0;
    std::vector<FitEvaluation> trace;

    std::string trace_csv() const;
    std::string best_json() const;
};

/// (1+1)-ES over theta with per-coordinate Gaussian proposals clamped to
/// the bounds, acceptance on loss <= current and a one-fifth success rule
/// on the step size. Exactly `budget` loss evaluations.
FitResult fit(const FitConfig& cfg, const std::vector<SilhouetteStats>& targets);

}  // namespace bonsai

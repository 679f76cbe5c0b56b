#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "bonsai/fit.hpp"
#include "bonsai/gaussian.hpp"
#include "bonsai/model.hpp"
#include "bonsai/render.hpp"

namespace bonsai {

struct FitSettings {
    Theta theta_lo{0.1, 0.0, 0.0, 0.0};
    Theta theta_hi{4.0, 8.0, 8.0, 0.0};
    double step_sigma = 1.0;
    std::size_t budget = 200;
    std::uint64_t seed = 1;
    std::size_t resolution = 96;  // silhouette render size in pixels
};

/// One file drives every stage. Format: `key = value` lines grouped under
/// `[section]` headers, `#` comments; values are numbers, true/false,
/// quoted strings or `[a, b, ...]` number lists. Top-level `seed` feeds
/// every random stream.
struct PipelineConfig {
    GrowthParams growth;
    SizingParams sizing;
    double density = 3000.0;  // surface samples per unit area
    double opacity = 0.8;
    Palette palette;
    RigSettings rig;
    FitSettings fit;
    std::string output_dir = "bonsai_out";

    /// Throws the ValidationError subclass of the first broken rule.
    void validate() const;

    /// Fit setup with theta_init taken from the growth weights.
    FitConfig fit_config() const;
};

/// Throws ParseError on syntax errors and unknown keys, ValidationError
/// when the parsed values break a stage invariant.
PipelineConfig parse_config(std::string_view text);

/// parse_config on a file; IoError when it cannot be read.
PipelineConfig load_config(const std::filesystem::path& path);

/// Human-readable table of every recognized key with its default.
std::string config_reference();

}  // namespace bonsai

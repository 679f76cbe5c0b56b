#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bonsai {

/// Deterministic random stream. The engine (mt19937_64) has a standardized
/// output sequence; the real-valued draws below avoid the implementation-defined
/// std distributions so sequences are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal deviate (Box-Muller, one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a named sub-stream of the master seed ("attractors", "sampling",
/// "cameras", "fitting", ...). Stages re-run independently stay reproducible.
std::uint64_t substream_seed(std::uint64_t master, std::string_view name);

inline Rng substream(std::uint64_t master, std::string_view name) {
    return Rng(substream_seed(master, name));
}

}  // namespace bonsai

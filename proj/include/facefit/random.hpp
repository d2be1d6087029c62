#pragma once

#include <cstdint>
#include <random>

namespace facefit {

/// Platform-independent random source. std::mt19937_64 output is fully
/// specified by the standard, the distributions built on top of it are not,
/// so uniform and normal draws are derived here by hand.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal (Box-Muller, no cached second value).
    double normal();

private:
    std::mt19937_64 engine_;
};

} // namespace facefit

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace dpmf {

/// FNV-1a; stable across platforms, used to turn role tags into seed words.
std::uint64_t stable_hash(std::string_view text);

/// Seeded stream over std::mt19937_64. The engine's output sequence is fixed
/// by the standard; the conversions below are written out so that draws do
/// not depend on a particular standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::initializer_list<std::uint64_t> seed_words);

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform();

    /// Uniform in [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dpmf

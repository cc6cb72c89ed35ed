#pragma once

#include <cstddef>
#include <cstdint>
#include <map>

namespace dpmf {

/// Weights attached to one source matrix: the reconstruction weight of its
/// observed cells and the regularization of its attribute factors.
struct SourceWeights {
    double lambda_data = 0.8;
    double lambda_latent = 0.1;

    friend bool operator==(const SourceWeights&, const SourceWeights&) = default;
};

struct Hyperparams {
    std::size_t k = 10;
    double alpha = 0.01;
    /// Stop when the relative loss decrease falls below this.
    double epsilon = 1e-6;
    std::size_t max_iters = 100;
    double lambda_U = 0.1;
    double lambda_V = 0.1;
    SourceWeights user_source_default;
    SourceWeights item_source_default;
    std::map<std::uint32_t, SourceWeights> user_source_overrides;
    std::map<std::uint32_t, SourceWeights> item_source_overrides;
    std::uint64_t seed = 42;
    /// Half-width of the uniform initialization interval.
    double init_scale = 0.01;

    SourceWeights user_source(std::uint32_t n) const;
    SourceWeights item_source(std::uint32_t m) const;

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;
};

}  // namespace dpmf

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dpmf/dataset.hpp"

namespace dpmf {

/// Planted-factor data generator used in place of real rating corpora.
///
/// True user, item and attribute factors are Gaussian with mean
/// sqrt(center / k) per coordinate, so U_i.V_j is centered on the middle of
/// the rating scale. Ratings are clamp(U_i.V_j + noise) over a sampled set of
/// cells whose size is round(density * users * items); per-user activity and
/// per-item popularity are log-normal, which populates the low-count
/// cold-start buckets. Informative sources read the same true factors as the
/// ratings; noise sources read independent draws.
struct SyntheticConfig {
    std::size_t users = 200;
    std::size_t items = 150;
    std::size_t k = 5;
    double density = 0.05;
    double scale_lo = 1.0;
    double scale_hi = 5.0;
    double factor_sd = 0.3;
    double noise_sd = 0.1;
    /// Log-normal sigma of user activity and item popularity weights.
    double activity_skew = 1.0;

    std::size_t user_sources = 2;
    std::size_t item_sources = 0;
    std::size_t attributes_per_source = 40;
    /// Fraction of a source row's attributes that are observed.
    double source_density = 0.2;
    double source_noise_sd = 0.1;
    /// Fraction of the global users (items) each source describes.
    double source_overlap = 1.0;
    /// Source-only entities per source, absent from the rating matrix.
    std::size_t private_entities = 0;
    bool informative = true;

    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticData {
    RatingDataset ratings;
    /// User sources first, then item sources, each by ascending index.
    std::vector<SourceMatrix> sources;
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

}  // namespace dpmf

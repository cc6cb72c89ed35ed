#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpmf/dataset.hpp"
#include "dpmf/hyperparams.hpp"
#include "dpmf/objective.hpp"

namespace dpmf {

struct SplitSpec {
    double train_fraction = 0.8;
    std::size_t repetitions = 5;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SplitPair {
    RatingDataset train;
    RatingDataset test;
};

/// Train/test partition of the observed ratings. Both halves keep the full
/// user and item label sets, so users whose ratings all fall into the test
/// half remain addressable. Deterministic per (seed, repetition).
SplitPair split_once(const RatingDataset& data, double train_fraction, std::uint64_t seed, std::size_t repetition);

std::vector<SplitPair> split(const RatingDataset& data, const SplitSpec& spec);

/// A held-out rating and the model's guess. Indices refer to the rating
/// matrix labels.
struct Prediction {
    std::uint32_t user;
    std::uint32_t item;
    double truth;
    double predicted;
};

/// sqrt(mean((truth - predicted)^2)). Throws EmptyInput.
double rmse(std::span<const Prediction> predictions);

std::vector<Prediction> predict_ratings(const ModelState& state, const RatingDataset& test);

// --- cold-start buckets -----------------------------------------------------

enum class BucketAxis { ByUserRatingCount, ByItemRatingCount };

std::string_view to_string(BucketAxis axis);

struct BucketBound {
    std::string_view label;
    std::size_t lo;
    std::size_t hi;  // inclusive
};

/// "0", "1-5", "6-10", "11-20", "21-40", "41-80", "81-160", "161-320",
/// "321-640", ">640".
std::span<const BucketBound> bucket_table();

std::size_t bucket_index(std::size_t rating_count);

struct Bucket {
    std::string label;
    std::size_t count = 0;
    /// NaN when the bucket is empty.
    double rmse = 0.0;
};

struct BucketReport {
    BucketAxis axis = BucketAxis::ByUserRatingCount;
    std::vector<Bucket> buckets;
};

/// Groups test predictions by how many training ratings their user (or item)
/// has, and reports the RMSE per group.
BucketReport bucketed_rmse(std::span<const Prediction> predictions, const SparseMatrix& train, BucketAxis axis);

// --- baselines --------------------------------------------------------------

/// Predicts each user's training mean; users without training ratings get
/// the global training mean.
std::vector<Prediction> baseline_user_mean(const RatingDataset& train, const RatingDataset& test);

/// Item-side mirror of baseline_user_mean.
std::vector<Prediction> baseline_item_mean(const RatingDataset& train, const RatingDataset& test);

// --- source-count sweep -----------------------------------------------------

enum class SweepMode { UserOnly, ItemOnly, Both };

std::string_view to_string(SweepMode mode);

/// The first `count` sources of `ordered` that the mode admits.
std::vector<SourceMatrix> select_sources(std::span<const SourceMatrix> ordered, SweepMode mode, std::size_t count);

std::size_t eligible_sources(std::span<const SourceMatrix> ordered, SweepMode mode);

struct SweepRow {
    std::size_t source_count = 0;
    double mean_rmse = 0.0;
    std::vector<double> rmse_per_repetition;
};

struct SweepTable {
    SweepMode mode = SweepMode::Both;
    std::vector<SweepRow> rows;
};

/// For c = 0..N trains on each split with the first c admitted sources and
/// reports the mean test RMSE. c = 0 is plain PMF on the rating matrix.
/// Repetitions run concurrently; the result does not depend on scheduling.
SweepTable source_sweep(const RatingDataset& ratings, std::span<const SourceMatrix> ordered, const SplitSpec& spec,
                        const Hyperparams& hyper, SweepMode mode);

std::string format_sweep(const SweepTable& table);

}  // namespace dpmf

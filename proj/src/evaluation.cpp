#include "dpmf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>

#include "dpmf/errors.hpp"
#include "dpmf/rng.hpp"
#include "dpmf/trainer.hpp"

namespace dpmf {

namespace {

constexpr std::array<BucketBound, 10> kBuckets = {{
    {"0", 0, 0},
    {"1-5", 1, 5},
    {"6-10", 6, 10},
    {"11-20", 11, 20},
    {"21-40", 21, 40},
    {"41-80", 41, 80},
    {"81-160", 81, 160},
    {"161-320", 161, 320},
    {"321-640", 321, 640},
    {">640", 641, static_cast<std::size_t>(-1)},
}};

bool admits(SweepMode mode, SourceKind kind) {
    switch (mode) {
        case SweepMode::UserOnly: return kind == SourceKind::User;
        case SweepMode::ItemOnly: return kind == SourceKind::Item;
        case SweepMode::Both: return true;
    }
    return false;
}

std::vector<Prediction> mean_baseline(const RatingDataset& train, const RatingDataset& test, bool by_user) {
    const SparseMatrix& r = train.ratings;
    const std::size_t n = by_user ? r.n_rows() : r.n_cols();
    std::vector<double> sums(n, 0.0);
    std::vector<std::size_t> counts(n, 0);
    double global_sum = 0.0;
    for (const Entry& e : r.entries()) {
        const std::size_t key = by_user ? e.row : e.col;
        sums[key] += e.value;
        counts[key] += 1;
        global_sum += e.value;
    }
    const double global_mean = r.nnz() > 0 ? global_sum / static_cast<double>(r.nnz()) : 0.5 * (train.scale_lo + train.scale_hi);

    std::vector<Prediction> out;
    out.reserve(test.ratings.nnz());
    for (const Entry& e : test.ratings.entries()) {
        const std::size_t key = by_user ? e.row : e.col;
        const bool known = key < n && counts[key] > 0;
        const double guess = known ? sums[key] / static_cast<double>(counts[key]) : global_mean;
        out.push_back(Prediction{e.row, e.col, e.value, guess});
    }
    return out;
}

}  // namespace

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("train fraction must lie strictly between 0 and 1");
    }
    if (repetitions < 1) {
        throw InvalidArgument("repetitions must be >= 1");
    }
}

SplitPair split_once(const RatingDataset& data, double train_fraction, std::uint64_t seed, std::size_t repetition) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("train fraction must lie strictly between 0 and 1");
    }
    const auto entries = data.ratings.entries();
    const std::size_t n = entries.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng({seed, repetition, stable_hash("split")});
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));

    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < n_train; ++i) {
        in_train[order[i]] = true;
    }
    std::vector<Entry> train, test;
    train.reserve(n_train);
    test.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
        (in_train[i] ? train : test).push_back(entries[i]);
    }
    return SplitPair{
        RatingDataset{data.ratings.with_entries(std::move(train)), data.scale_lo, data.scale_hi},
        RatingDataset{data.ratings.with_entries(std::move(test)), data.scale_lo, data.scale_hi},
    };
}

std::vector<SplitPair> split(const RatingDataset& data, const SplitSpec& spec) {
    spec.validate();
    std::vector<SplitPair> out;
    out.reserve(spec.repetitions);
    for (std::size_t r = 0; r < spec.repetitions; ++r) {
        out.push_back(split_once(data, spec.train_fraction, spec.seed, r));
    }
    return out;
}

double rmse(std::span<const Prediction> predictions) {
    if (predictions.empty()) {
        throw EmptyInput("rmse of an empty prediction list");
    }
    double sum = 0.0;
    for (const Prediction& p : predictions) {
        const double d = p.truth - p.predicted;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predictions.size()));
}

std::vector<Prediction> predict_ratings(const ModelState& state, const RatingDataset& test) {
    if (state.users.n_cols() != test.ratings.n_rows() || state.items.n_cols() != test.ratings.n_cols()) {
        throw DimensionMismatch("model and test matrix disagree on users or items");
    }
    std::vector<Prediction> out;
    out.reserve(test.ratings.nnz());
    for (const Entry& e : test.ratings.entries()) {
        out.push_back(Prediction{e.row, e.col, e.value, predict_at(state, e.row, e.col, test.scale_lo, test.scale_hi)});
    }
    return out;
}

std::string_view to_string(BucketAxis axis) {
    return axis == BucketAxis::ByUserRatingCount ? "user" : "item";
}

std::span<const BucketBound> bucket_table() {
    return kBuckets;
}

std::size_t bucket_index(std::size_t rating_count) {
    for (std::size_t b = 0; b < kBuckets.size(); ++b) {
        if (rating_count >= kBuckets[b].lo && rating_count <= kBuckets[b].hi) {
            return b;
        }
    }
    return kBuckets.size() - 1;
}

BucketReport bucketed_rmse(std::span<const Prediction> predictions, const SparseMatrix& train, BucketAxis axis) {
    const bool by_user = axis == BucketAxis::ByUserRatingCount;
    const std::vector<std::size_t> counts = by_user ? train.row_counts() : train.col_counts();

    std::vector<double> sums(kBuckets.size(), 0.0);
    BucketReport report;
    report.axis = axis;
    for (const BucketBound& b : kBuckets) {
        report.buckets.push_back(Bucket{std::string(b.label), 0, 0.0});
    }
    for (const Prediction& p : predictions) {
        const std::size_t key = by_user ? p.user : p.item;
        const std::size_t count = key < counts.size() ? counts[key] : 0;
        const std::size_t b = bucket_index(count);
        const double d = p.truth - p.predicted;
        sums[b] += d * d;
        report.buckets[b].count += 1;
    }
    for (std::size_t b = 0; b < kBuckets.size(); ++b) {
        auto& bucket = report.buckets[b];
        bucket.rmse = bucket.count > 0 ? std::sqrt(sums[b] / static_cast<double>(bucket.count)) : std::nan("");
    }
    return report;
}

std::vector<Prediction> baseline_user_mean(const RatingDataset& train, const RatingDataset& test) {
    return mean_baseline(train, test, true);
}

std::vector<Prediction> baseline_item_mean(const RatingDataset& train, const RatingDataset& test) {
    return mean_baseline(train, test, false);
}

std::string_view to_string(SweepMode mode) {
    switch (mode) {
        case SweepMode::UserOnly: return "user";
        case SweepMode::ItemOnly: return "item";
        case SweepMode::Both: return "both";
    }
    return "unknown";
}

std::vector<SourceMatrix> select_sources(std::span<const SourceMatrix> ordered, SweepMode mode, std::size_t count) {
    std::vector<SourceMatrix> out;
    for (const SourceMatrix& s : ordered) {
        if (out.size() == count) {
            break;
        }
        if (admits(mode, s.kind)) {
            out.push_back(s);
        }
    }
    return out;
}

std::size_t eligible_sources(std::span<const SourceMatrix> ordered, SweepMode mode) {
    return static_cast<std::size_t>(
        std::count_if(ordered.begin(), ordered.end(), [&](const SourceMatrix& s) { return admits(mode, s.kind); }));
}

SweepTable source_sweep(const RatingDataset& ratings, std::span<const SourceMatrix> ordered, const SplitSpec& spec,
                        const Hyperparams& hyper, SweepMode mode) {
    spec.validate();
    hyper.validate();
    const std::vector<SplitPair> splits = split(ratings, spec);
    const std::size_t n_sources = eligible_sources(ordered, mode);

    SweepTable table;
    table.mode = mode;
    for (std::size_t c = 0; c <= n_sources; ++c) {
        const std::vector<SourceMatrix> chosen = select_sources(ordered, mode, c);
        std::vector<std::future<double>> runs;
        for (const SplitPair& pair : splits) {
            runs.push_back(std::async(std::launch::async, [&pair, &chosen, &hyper, c] {
                Problem problem(pair.train, chosen);
                TrainResult trained = train_centralized(problem, hyper);
                if (trained.trace.reason == Termination::Diverged) {
                    throw Error("training diverged with " + std::to_string(c) + " sources");
                }
                const auto predictions = predict_ratings(trained.state, pair.test);
                return rmse(predictions);
            }));
        }
        SweepRow row;
        row.source_count = c;
        for (auto& run : runs) {
            row.rmse_per_repetition.push_back(run.get());
        }
        double sum = 0.0;
        for (double v : row.rmse_per_repetition) {
            sum += v;
        }
        row.mean_rmse = sum / static_cast<double>(row.rmse_per_repetition.size());
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_sweep(const SweepTable& table) {
    std::string out = "# mode=" + std::string(to_string(table.mode)) + "\nsources\tmean_rmse";
    const std::size_t reps = table.rows.empty() ? 0 : table.rows.front().rmse_per_repetition.size();
    for (std::size_t r = 0; r < reps; ++r) {
        out += "\trep" + std::to_string(r);
    }
    out += '\n';
    char buf[64];
    for (const SweepRow& row : table.rows) {
        out += std::to_string(row.source_count);
        std::snprintf(buf, sizeof(buf), "\t%.6f", row.mean_rmse);
        out += buf;
        for (double v : row.rmse_per_repetition) {
            std::snprintf(buf, sizeof(buf), "\t%.6f", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace dpmf

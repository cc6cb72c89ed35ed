#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>

#include <json.hpp>

#include "dpmf/errors.hpp"
#include "dpmf/format.hpp"
#include "dpmf/io.hpp"
#include "dpmf/trainer.hpp"
#include "dpmf/transfer.hpp"

namespace dpmf::cli {

namespace {

using json = nlohmann::json;

std::string source_stem(SourceKind kind, std::uint32_t index) {
    return std::string(to_string(kind)) + "_source_" + std::to_string(index);
}

json number_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string fixed(double v) {
    if (!std::isfinite(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

Problem load_problem(const fs::path& manifest_path, Manifest& manifest) {
    manifest = load_manifest(manifest_path);
    LoadedData data = load_dataset(manifest);
    return Problem(std::move(data.ratings), std::move(data.sources));
}

struct Trained {
    ModelState state;
    TrainTrace trace;
    std::optional<TrafficLedger> ledger;
};

Trained train(const Problem& problem, const Hyperparams& hyper, Mode mode, SlaveSchedule schedule) {
    if (mode == Mode::Central) {
        TrainResult r = train_centralized(problem, hyper);
        return {std::move(r.state), std::move(r.trace), std::nullopt};
    }
    DistributedOptions options;
    options.schedule = schedule;
    DistributedResult r = run_distributed(problem, hyper, options);
    return {std::move(r.state), std::move(r.trace), std::move(r.ledger)};
}

void write_factors(const fs::path& dir, const Problem& problem, const ModelState& state) {
    write_file_atomic(dir / "U.tsv", format_factors(state.users));
    write_file_atomic(dir / "V.tsv", format_factors(state.items));
    auto sources = [&](std::span<const AlignedSource> specs, const std::vector<SourceFactors>& factors) {
        for (std::size_t s = 0; s < factors.size(); ++s) {
            const std::string stem = source_stem(specs[s].source.kind, specs[s].source.index);
            write_file_atomic(dir / (stem + ".entities.tsv"), format_factors(factors[s].entities));
            write_file_atomic(dir / (stem + ".attributes.tsv"), format_factors(factors[s].attributes));
        }
    };
    sources(problem.user_sources(), state.user_sources);
    sources(problem.item_sources(), state.item_sources);
}

/// Pooled bucket statistics across repetitions.
struct BucketPool {
    std::vector<std::size_t> count = std::vector<std::size_t>(bucket_table().size(), 0);
    std::vector<double> sum_sq = std::vector<double>(bucket_table().size(), 0.0);

    void add(const BucketReport& report) {
        for (std::size_t b = 0; b < report.buckets.size(); ++b) {
            const Bucket& bucket = report.buckets[b];
            count[b] += bucket.count;
            if (bucket.count > 0) {
                sum_sq[b] += bucket.rmse * bucket.rmse * static_cast<double>(bucket.count);
            }
        }
    }

    double rmse(std::size_t b) const {
        return count[b] > 0 ? std::sqrt(sum_sq[b] / static_cast<double>(count[b])) : std::nan("");
    }
};

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

}  // namespace

Hyperparams resolve_hyperparams(const std::optional<std::string>& manifest_hyper, const HyperFlags& flags) {
    Hyperparams h;
    if (manifest_hyper) {
        h = hyperparams_from_json(*manifest_hyper, h);
    }
    if (flags.config) {
        if (!fs::exists(*flags.config)) {
            throw IoError("config file not found: " + *flags.config);
        }
        h = hyperparams_from_json(read_file(*flags.config), h);
    }
    if (flags.k) h.k = *flags.k;
    if (flags.alpha) h.alpha = *flags.alpha;
    if (flags.epsilon) h.epsilon = *flags.epsilon;
    if (flags.max_iters) h.max_iters = *flags.max_iters;
    if (flags.lambda_U) h.lambda_U = *flags.lambda_U;
    if (flags.lambda_V) h.lambda_V = *flags.lambda_V;
    if (flags.seed) h.seed = *flags.seed;
    // source weights given on the command line apply to every source
    if (flags.lambda_S || flags.lambda_Z) {
        for (SourceWeights* w : {&h.user_source_default, &h.item_source_default}) {
            if (flags.lambda_S) w->lambda_data = *flags.lambda_S;
            if (flags.lambda_Z) w->lambda_latent = *flags.lambda_Z;
        }
        for (auto* overrides : {&h.user_source_overrides, &h.item_source_overrides}) {
            for (auto& [idx, w] : *overrides) {
                if (flags.lambda_S) w.lambda_data = *flags.lambda_S;
                if (flags.lambda_Z) w.lambda_latent = *flags.lambda_Z;
            }
        }
    }
    h.validate();
    return h;
}

int cmd_generate(const GenerateOptions& o) {
    SyntheticData data = generate_synthetic(o.config);
    Manifest m;
    m.ratings_file = "ratings.tsv";
    m.scale_lo = o.config.scale_lo;
    m.scale_hi = o.config.scale_hi;
    write_file_atomic(o.out / m.ratings_file, format_triples(data.ratings.ratings));
    for (const SourceMatrix& s : data.sources) {
        ManifestSource entry{source_stem(s.kind, s.index) + ".tsv", s.kind, s.index};
        write_file_atomic(o.out / entry.file, format_triples(s.data));
        m.sources.push_back(std::move(entry));
    }
    write_file_atomic(o.out / "manifest.json", format_manifest(m));
    std::cout << "wrote " << data.ratings.ratings.nnz() << " ratings and " << data.sources.size() << " sources to "
              << o.out.string() << "\n";
    return kOk;
}

int cmd_split(const SplitOptions& o) {
    Manifest manifest = load_manifest(o.manifest);
    LoadedData data = load_dataset(manifest);
    const auto pairs = split(data.ratings, o.spec);
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const fs::path dir = o.out / ("rep" + std::to_string(r));
        write_file_atomic(dir / "train.tsv", format_triples(pairs[r].train.ratings));
        write_file_atomic(dir / "test.tsv", format_triples(pairs[r].test.ratings));
        Manifest m = manifest;
        m.ratings_file = "train.tsv";
        for (auto& s : m.sources) {
            fs::path p(s.file);
            s.file = fs::absolute(p.is_absolute() ? p : manifest.base_dir / p).lexically_normal().string();
        }
        write_file_atomic(dir / "manifest.json", format_manifest(m));
    }
    std::cout << "wrote " << pairs.size() << " splits to " << o.out.string() << "\n";
    return kOk;
}

int cmd_train(const TrainOptions& o) {
    Manifest manifest;
    Problem problem = load_problem(o.manifest, manifest);
    const Hyperparams hyper = resolve_hyperparams(manifest.hyperparams_json, o.hyper);

    Trained t = train(problem, hyper, o.mode, o.schedule);
    write_file_atomic(o.out / "trace.tsv", format_trace(t.trace));
    if (t.ledger) {
        write_file_atomic(o.out / "ledger.tsv", t.ledger->format());
    }
    if (t.trace.reason == Termination::Diverged) {
        std::cerr << "error: training diverged at iteration " << t.trace.records.back().iteration
                  << "; no factors written\n";
        return kDiverged;
    }
    write_factors(o.out / "factors", problem, t.state);

    json summary{
        {"mode", o.mode == Mode::Central ? "central" : "distributed"},
        {"termination", std::string(to_string(t.trace.reason))},
        {"iterations", t.trace.records.size()},
        {"final_loss", t.trace.records.empty() ? json(nullptr) : number_or_null(t.trace.records.back().loss)},
        {"hyperparams", json::parse(hyperparams_to_json(hyper))},
    };
    if (t.ledger) {
        summary["ledger_total_bytes"] = t.ledger->total_bytes();
        summary["ledger_messages"] = t.ledger->message_count();
    }
    write_file_atomic(o.out / "summary.json", summary.dump(2) + "\n");
    std::cout << "training " << to_string(t.trace.reason) << " after " << t.trace.records.size() << " iterations";
    if (!t.trace.records.empty()) {
        std::cout << ", loss " << format_double(t.trace.records.back().loss);
    }
    std::cout << "\n";
    return kOk;
}

int cmd_evaluate(const EvaluateOptions& o) {
    const Manifest manifest = load_manifest(o.manifest);
    LoadedData data = load_dataset(manifest);
    const Hyperparams hyper = resolve_hyperparams(manifest.hyperparams_json, o.hyper);
    o.spec.validate();
    const std::vector<SourceMatrix>& sources = data.sources;
    const auto pairs = split(data.ratings, o.spec);
    for (const SplitPair& pair : pairs) {
        if (pair.test.ratings.nnz() == 0) {
            throw InvalidArgument("the split leaves the test set empty; lower --train-fraction");
        }
        if (pair.train.ratings.nnz() == 0) {
            throw InvalidArgument("the split leaves the training set empty; raise --train-fraction");
        }
    }

    const std::vector<std::string> methods{"model", "pmf", "user_mean", "item_mean"};
    std::map<std::string, std::vector<double>> per_rep;
    std::map<std::string, std::size_t> counts;
    std::map<std::pair<std::string, BucketAxis>, BucketPool> pools;

    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const SplitPair& pair = pairs[r];
        Trained model = train(Problem(pair.train, sources), hyper, o.mode, SlaveSchedule::Ascending);
        TrainResult pmf = train_centralized(Problem(pair.train, {}), hyper);
        if (model.trace.reason == Termination::Diverged || pmf.trace.reason == Termination::Diverged) {
            std::cerr << "error: training diverged on repetition " << r << "\n";
            return kDiverged;
        }
        std::map<std::string, std::vector<Prediction>> preds{
            {"model", predict_ratings(model.state, pair.test)},
            {"pmf", predict_ratings(pmf.state, pair.test)},
            {"user_mean", baseline_user_mean(pair.train, pair.test)},
            {"item_mean", baseline_item_mean(pair.train, pair.test)},
        };
        for (const auto& name : methods) {
            per_rep[name].push_back(rmse(preds[name]));
            counts[name] += preds[name].size();
            for (BucketAxis axis : {BucketAxis::ByUserRatingCount, BucketAxis::ByItemRatingCount}) {
                pools[{name, axis}].add(bucketed_rmse(preds[name], pair.train.ratings, axis));
            }
        }
    }

    std::string tsv = "section\taxis\tbucket\tmethod\tcount\trmse\n";
    json report{
        {"mode", o.mode == Mode::Central ? "central" : "distributed"},
        {"train_fraction", o.spec.train_fraction},
        {"repetitions", o.spec.repetitions},
        {"split_seed", o.spec.seed},
        {"sources", sources.size()},
        {"hyperparams", json::parse(hyperparams_to_json(hyper))},
    };
    for (const auto& name : methods) {
        const double m = mean(per_rep[name]);
        tsv += "overall\t-\tall\t" + name + "\t" + std::to_string(counts[name]) + "\t" + fixed(m) + "\n";
        report["rmse"][name] = m;
        report["rmse_per_repetition"][name] = per_rep[name];
    }
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        for (const auto& name : methods) {
            tsv += "repetition\t-\t" + std::to_string(r) + "\t" + name + "\t" + std::to_string(pairs[r].test.ratings.nnz()) +
                   "\t" + fixed(per_rep[name][r]) + "\n";
        }
    }
    for (BucketAxis axis : {BucketAxis::ByUserRatingCount, BucketAxis::ByItemRatingCount}) {
        json rows = json::array();
        for (std::size_t b = 0; b < bucket_table().size(); ++b) {
            const std::string label(bucket_table()[b].label);
            json row{{"label", label}, {"count", pools[{"model", axis}].count[b]}};
            for (const auto& name : methods) {
                const BucketPool& pool = pools[{name, axis}];
                tsv += "bucket\t" + std::string(to_string(axis)) + "\t" + label + "\t" + name + "\t" +
                       std::to_string(pool.count[b]) + "\t" + fixed(pool.rmse(b)) + "\n";
                row[name] = number_or_null(pool.rmse(b));
            }
            rows.push_back(std::move(row));
        }
        report["buckets"][std::string(to_string(axis))] = std::move(rows);
    }

    if (o.sweep) {
        SweepTable table = source_sweep(data.ratings, sources, o.spec, hyper, *o.sweep);
        write_file_atomic(o.out / "sweep.tsv", format_sweep(table));
        json rows = json::array();
        for (const SweepRow& row : table.rows) {
            rows.push_back({{"sources", row.source_count}, {"mean_rmse", row.mean_rmse}, {"rmse", row.rmse_per_repetition}});
        }
        report["sweep"] = {{"mode", std::string(to_string(*o.sweep))}, {"rows", std::move(rows)}};
    }

    write_file_atomic(o.out / "report.tsv", tsv);
    write_file_atomic(o.out / "report.json", report.dump(2) + "\n");
    for (const auto& name : methods) {
        std::cout << name << "\t" << fixed(mean(per_rep[name])) << "\n";
    }
    return kOk;
}

int cmd_compare(const CompareOptions& o) {
    const fs::path fa = o.a / "factors";
    const fs::path fb = o.b / "factors";
    for (const fs::path& dir : {fa, fb}) {
        if (!fs::is_directory(dir)) {
            throw IoError("no factors directory at " + dir.string());
        }
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(fa)) {
        if (entry.path().extension() == ".tsv") {
            names.push_back(entry.path().filename().string());
        }
    }
    for (const auto& entry : fs::directory_iterator(fb)) {
        if (entry.path().extension() == ".tsv" && !fs::exists(fa / entry.path().filename())) {
            throw InvalidArgument("factor file " + entry.path().filename().string() + " exists only in " + o.b.string());
        }
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) {
        throw InvalidArgument("no factor files under " + fa.string());
    }

    double worst = 0.0;
    for (const std::string& name : names) {
        if (!fs::exists(fb / name)) {
            throw InvalidArgument("factor file " + name + " exists only in " + o.a.string());
        }
        const FactorMatrix a = parse_factors(read_file(fa / name), Namespace::user(), (fa / name).string());
        const FactorMatrix b = parse_factors(read_file(fb / name), Namespace::user(), (fb / name).string());
        if (a.k() != b.k() || !(a.labels() == b.labels())) {
            throw InvalidArgument("factor file " + name + " differs in shape or labels");
        }
        double diff = 0.0;
        for (std::size_t i = 0; i < a.values().size(); ++i) {
            diff = std::max(diff, std::abs(a.values()[i] - b.values()[i]));
        }
        if (std::isnan(diff)) {
            diff = std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, diff);
        std::cout << name << "\t" << format_double(diff) << "\n";
    }
    std::cout << "max_abs_diff\t" << format_double(worst) << "\n";
    if (worst <= o.tolerance) {
        std::cout << "within tolerance " << format_double(o.tolerance) << "\n";
        return kOk;
    }
    std::cout << "exceeds tolerance " << format_double(o.tolerance) << "\n";
    return kDiverged;
}

int cmd_transfer_report(const TransferOptions& o) {
    TransferReport r = transfer_report(o.shared_users, o.shared_items, o.k, o.iterations, o.nnz);
    if (o.json) {
        json j{
            {"shared_users", r.shared_users},
            {"shared_items", r.shared_items},
            {"k", r.k},
            {"iterations", r.iterations},
            {"centralized_nnz", r.centralized_nnz},
            {"centralized_bytes", r.centralized_bytes},
            {"per_iteration_bytes", r.per_iteration_bytes},
            {"distributed_bytes", r.distributed_bytes},
            {"ratio", number_or_null(r.ratio)},
        };
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << format_transfer_report(r);
    }
    return kOk;
}

}  // namespace dpmf::cli

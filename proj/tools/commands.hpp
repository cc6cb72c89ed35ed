#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dpmf/distributed.hpp"
#include "dpmf/evaluation.hpp"
#include "dpmf/hyperparams.hpp"
#include "dpmf/synthetic.hpp"

namespace dpmf::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kDiverged = 2 };

/// Hyperparameter flags; unset fields keep the lower-precedence value.
struct HyperFlags {
    std::optional<std::string> config;
    std::optional<std::size_t> k;
    std::optional<double> alpha;
    std::optional<double> epsilon;
    std::optional<std::size_t> max_iters;
    std::optional<double> lambda_U;
    std::optional<double> lambda_V;
    std::optional<double> lambda_S;
    std::optional<double> lambda_Z;
    std::optional<std::uint64_t> seed;
};

enum class Mode { Central, Distributed };

/// Built-in defaults, then the manifest's "hyperparams" object, then the
/// --config file, then individual flags.
Hyperparams resolve_hyperparams(const std::optional<std::string>& manifest_hyper, const HyperFlags& flags);

struct GenerateOptions {
    fs::path out;
    SyntheticConfig config;
};

struct SplitOptions {
    fs::path manifest;
    fs::path out;
    SplitSpec spec;
};

struct TrainOptions {
    fs::path manifest;
    fs::path out;
    Mode mode = Mode::Central;
    SlaveSchedule schedule = SlaveSchedule::Ascending;
    HyperFlags hyper;
};

struct EvaluateOptions {
    fs::path manifest;
    fs::path out;
    Mode mode = Mode::Central;
    SplitSpec spec;
    HyperFlags hyper;
    std::optional<SweepMode> sweep;
};

struct CompareOptions {
    fs::path a;
    fs::path b;
    double tolerance = 1e-9;
};

struct TransferOptions {
    std::uint64_t shared_users = 0;
    std::uint64_t shared_items = 0;
    std::uint64_t k = 10;
    std::uint64_t iterations = 100;
    std::uint64_t nnz = 0;
    bool json = false;
};

int cmd_generate(const GenerateOptions& options);
int cmd_split(const SplitOptions& options);
int cmd_train(const TrainOptions& options);
int cmd_evaluate(const EvaluateOptions& options);
int cmd_compare(const CompareOptions& options);
int cmd_transfer_report(const TransferOptions& options);

}  // namespace dpmf::cli

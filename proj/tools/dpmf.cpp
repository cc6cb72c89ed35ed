#include <exception>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace dpmf;
using namespace dpmf::cli;

namespace {

void add_hyper_flags(CLI::App* app, HyperFlags& h) {
    app->add_option("--config", h.config, "JSON hyperparameter file");
    app->add_option("--k", h.k, "latent dimension");
    app->add_option("--alpha", h.alpha, "step size");
    app->add_option("--epsilon", h.epsilon, "relative-decrease stopping threshold");
    app->add_option("--max-iters", h.max_iters, "iteration cap");
    app->add_option("--lambda-u", h.lambda_U, "user factor regularization");
    app->add_option("--lambda-v", h.lambda_V, "item factor regularization");
    app->add_option("--lambda-s", h.lambda_S, "source reconstruction weight, all sources");
    app->add_option("--lambda-z", h.lambda_Z, "source attribute regularization, all sources");
    app->add_option("--seed", h.seed, "initialization seed");
}

void add_split_flags(CLI::App* app, SplitSpec& s) {
    app->add_option("--train-fraction", s.train_fraction, "fraction of ratings used for training")
        ->capture_default_str();
    app->add_option("--repetitions", s.repetitions, "number of random splits")->capture_default_str();
    app->add_option("--split-seed", s.seed, "split seed")->capture_default_str();
}

const std::map<std::string, Mode> kModes{{"central", Mode::Central}, {"distributed", Mode::Distributed}};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-source matrix factorization recommender"};
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "write a synthetic dataset and manifest");
    generate->add_option("--out", gen.out, "output directory")->required();
    auto& c = gen.config;
    generate->add_option("--users", c.users)->capture_default_str();
    generate->add_option("--items", c.items)->capture_default_str();
    generate->add_option("--k", c.k, "planted latent dimension")->capture_default_str();
    generate->add_option("--density", c.density)->capture_default_str();
    generate->add_option("--noise", c.noise_sd, "rating noise sd")->capture_default_str();
    generate->add_option("--skew", c.activity_skew, "log-normal activity sigma")->capture_default_str();
    generate->add_option("--user-sources", c.user_sources)->capture_default_str();
    generate->add_option("--item-sources", c.item_sources)->capture_default_str();
    generate->add_option("--attributes", c.attributes_per_source)->capture_default_str();
    generate->add_option("--source-density", c.source_density)->capture_default_str();
    generate->add_option("--source-noise", c.source_noise_sd)->capture_default_str();
    generate->add_option("--overlap", c.source_overlap)->capture_default_str();
    generate->add_option("--private", c.private_entities, "source-only entities per source")->capture_default_str();
    bool noise_sources = false;
    generate->add_flag("--noise-sources", noise_sources, "sources independent of the ratings");
    generate->add_option("--seed", c.seed)->capture_default_str();

    SplitOptions sp;
    auto* split_cmd = app.add_subcommand("split", "write train/test splits");
    split_cmd->add_option("--manifest", sp.manifest)->required();
    split_cmd->add_option("--out", sp.out)->required();
    add_split_flags(split_cmd, sp.spec);

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "fit the model and write factors");
    train->add_option("--manifest", tr.manifest)->required();
    train->add_option("--out", tr.out)->required();
    train->add_option("--mode", tr.mode)->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
    const std::map<std::string, SlaveSchedule> schedules{{"ascending", SlaveSchedule::Ascending},
                                                         {"descending", SlaveSchedule::Descending},
                                                         {"concurrent", SlaveSchedule::Concurrent}};
    train->add_option("--schedule", tr.schedule, "slave scheduling in distributed mode")
        ->transform(CLI::CheckedTransformer(schedules, CLI::ignore_case));
    add_hyper_flags(train, tr.hyper);

    EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "RMSE against baselines over repeated splits");
    evaluate->add_option("--manifest", ev.manifest)->required();
    evaluate->add_option("--out", ev.out)->required();
    evaluate->add_option("--mode", ev.mode)->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
    add_split_flags(evaluate, ev.spec);
    add_hyper_flags(evaluate, ev.hyper);
    const std::map<std::string, SweepMode> sweeps{
        {"user", SweepMode::UserOnly}, {"item", SweepMode::ItemOnly}, {"both", SweepMode::Both}};
    evaluate->add_option("--sweep", ev.sweep, "also sweep the number of sources")
        ->transform(CLI::CheckedTransformer(sweeps, CLI::ignore_case));

    CompareOptions cmp;
    auto* compare = app.add_subcommand("compare", "max abs difference between two trained models");
    compare->add_option("a", cmp.a)->required();
    compare->add_option("b", cmp.b)->required();
    compare->add_option("--tolerance", cmp.tolerance)->capture_default_str();

    TransferOptions tx;
    auto* transfer = app.add_subcommand("transfer-report", "bytes moved: centralized vs distributed");
    transfer->add_option("--shared-users", tx.shared_users)->required();
    transfer->add_option("--shared-items", tx.shared_items)->capture_default_str();
    transfer->add_option("--k", tx.k)->capture_default_str();
    transfer->add_option("--iterations", tx.iterations)->capture_default_str();
    transfer->add_option("--nnz", tx.nnz, "source entries that centralization would move")->required();
    transfer->add_flag("--json", tx.json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*generate) {
            gen.config.informative = !noise_sources;
            return cmd_generate(gen);
        }
        if (*split_cmd) return cmd_split(sp);
        if (*train) return cmd_train(tr);
        if (*evaluate) return cmd_evaluate(ev);
        if (*compare) return cmd_compare(cmp);
        if (*transfer) return cmd_transfer_report(tx);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

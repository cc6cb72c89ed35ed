#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string output;
};

Run cli(const std::string& args) {
    const std::string command = std::string(DPMF_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        out.append(buf, n);
    }
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<double> trace_losses(const fs::path& p) {
    std::vector<double> losses;
    std::istringstream in(slurp(p));
    std::size_t it;
    double loss, update;
    while (in >> it >> loss >> update) {
        losses.push_back(loss);
    }
    return losses;
}

std::size_t count_lines(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        n += (!line.empty() && line[0] != '#') ? 1 : 0;
    }
    return n;
}

/// Every regular file under `dir`, relative path -> contents.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

const std::string kTrainFlags = " --alpha 0.005 --max-iters 120 --k 5";

fs::path generated(const std::string& tag, const std::string& extra = "") {
    const fs::path dir = dpmf::test::temp_dir(tag);
    const Run r = cli("generate --out " + (dir / "data").string() + " --seed 5" + extra);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    return dir;
}

}  // namespace

TEST_CASE("missing manifest is a usage error naming the path") {
    const Run r = cli("train --manifest /definitely/not/here.json --out /tmp/dpmf-unused");
    CHECK(r.code == 1);
    CHECK(r.output.find("/definitely/not/here.json") != std::string::npos);
}

TEST_CASE("bad arguments are usage errors") {
    CHECK(cli("").code == 1);
    CHECK(cli("train --manifest x --out y --mode sideways").code == 1);
    CHECK(cli("frobnicate").code == 1);
}

TEST_CASE("generate is reproducible and honours density") {
    const fs::path a = generated("cli-gen-a");
    const fs::path b = generated("cli-gen-b");
    CHECK(snapshot(a / "data") == snapshot(b / "data"));
    const double expected = 0.05 * 200 * 150;
    const double got = static_cast<double>(count_lines(a / "data" / "ratings.tsv"));
    CHECK(std::abs(got - expected) / expected <= 0.05);
    CHECK(fs::exists(a / "data" / "user_source_0.tsv"));
    CHECK(fs::exists(a / "data" / "user_source_1.tsv"));
}

TEST_CASE("central training decreases the loss and both modes agree") {
    const fs::path dir = generated("cli-train");
    const std::string m = " --manifest " + (dir / "data" / "manifest.json").string();
    const Run c = cli("train" + m + " --out " + (dir / "c").string() + kTrainFlags);
    REQUIRE_MESSAGE(c.code == 0, c.output);
    const Run d = cli("train" + m + " --out " + (dir / "d").string() + " --mode distributed" + kTrainFlags);
    REQUIRE_MESSAGE(d.code == 0, d.output);

    const auto losses = trace_losses(dir / "c" / "trace.tsv");
    REQUIRE(losses.size() == 120);
    for (std::size_t i = 1; i < losses.size(); ++i) {
        CHECK(losses[i] < losses[i - 1]);
    }
    CHECK(fs::exists(dir / "d" / "ledger.tsv"));
    CHECK_FALSE(fs::exists(dir / "c" / "ledger.tsv"));

    const Run cmp = cli("compare " + (dir / "c").string() + " " + (dir / "d").string() + " --tolerance 1e-9");
    CHECK_MESSAGE(cmp.code == 0, cmp.output);

    const Run other = cli("train" + m + " --out " + (dir / "o").string() + kTrainFlags + " --seed 99");
    REQUIRE(other.code == 0);
    const Run far = cli("compare " + (dir / "c").string() + " " + (dir / "o").string());
    CHECK(far.code == 2);
}

TEST_CASE("train is byte-for-byte deterministic") {
    const fs::path dir = generated("cli-det");
    const std::string m = " --manifest " + (dir / "data" / "manifest.json").string();
    for (const std::string mode : {"central", "distributed"}) {
        REQUIRE(cli("train" + m + " --mode " + mode + " --out " + (dir / (mode + "1")).string() + kTrainFlags).code == 0);
        REQUIRE(cli("train" + m + " --mode " + mode + " --out " + (dir / (mode + "2")).string() + kTrainFlags).code == 0);
        CHECK(snapshot(dir / (mode + "1")) == snapshot(dir / (mode + "2")));
    }
}

TEST_CASE("flags override the config file, which overrides the manifest") {
    const fs::path dir = generated("cli-precedence");
    const fs::path manifest = dir / "data" / "manifest.json";
    auto with_hyper = nlohmann::json::parse(slurp(manifest));
    with_hyper["hyperparams"] = {{"k", 7}, {"lambda_U", 0.3}};
    std::ofstream(manifest) << with_hyper.dump();
    const fs::path config = dir / "hyper.json";
    std::ofstream(config) << R"({"k": 3, "alpha": 0.002, "max_iters": 4, "epsilon": 0})";
    const Run r = cli("train --manifest " + (dir / "data" / "manifest.json").string() + " --out " + (dir / "t").string() +
                      " --config " + config.string() + " --max-iters 6");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const auto summary = nlohmann::json::parse(slurp(dir / "t" / "summary.json"));
    CHECK(summary["hyperparams"]["k"] == 3);
    CHECK(summary["hyperparams"]["lambda_U"] == 0.3);
    CHECK(summary["hyperparams"]["alpha"] == 0.002);
    CHECK(summary["iterations"] == 6);
    CHECK(summary["hyperparams"]["epsilon"] == 0.0);
    CHECK(cli("train --manifest " + (dir / "data" / "manifest.json").string() + " --out " + (dir / "u").string() +
              " --config " + (dir / "missing.json").string())
              .code == 1);
}

TEST_CASE("divergence exits with 2 and writes no factors") {
    const fs::path dir = generated("cli-diverge");
    const Run r = cli("train --manifest " + (dir / "data" / "manifest.json").string() + " --out " + (dir / "t").string() +
                      " --alpha 1000");
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(dir / "t" / "factors"));
}

TEST_CASE("evaluate reports the model beside the baselines") {
    const fs::path dir = generated("cli-eval");
    const Run r = cli("evaluate --manifest " + (dir / "data" / "manifest.json").string() + " --out " +
                      (dir / "e").string() + " --repetitions 2" + kTrainFlags);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const std::string tsv = slurp(dir / "e" / "report.tsv");
    for (const char* method : {"model", "pmf", "user_mean", "item_mean"}) {
        CHECK(tsv.find(std::string("overall\t-\tall\t") + method + "\t") != std::string::npos);
    }
    const auto report = nlohmann::json::parse(slurp(dir / "e" / "report.json"));
    CHECK(report["buckets"]["user"].size() == 10);
    CHECK(report["buckets"]["item"].size() == 10);
    CHECK(report["rmse_per_repetition"]["model"].size() == 2);
}

TEST_CASE("evaluate rejects an empty test split") {
    const fs::path dir = generated("cli-eval-empty");
    const Run r = cli("evaluate --manifest " + (dir / "data" / "manifest.json").string() + " --out " +
                      (dir / "e").string() + " --train-fraction 0.99999");
    CHECK(r.code == 1);
    CHECK_FALSE(fs::exists(dir / "e" / "report.tsv"));
}

TEST_CASE("noise-free low-rank data is fitted almost exactly") {
    const fs::path dir = generated("cli-perfect", " --users 30 --items 30 --k 2 --density 0.6 --noise 0 --skew 0"
                                                  " --user-sources 0");
    const Run r = cli("evaluate --manifest " + (dir / "data" / "manifest.json").string() + " --out " +
                      (dir / "e").string() +
                      " --repetitions 1 --k 2 --alpha 0.01 --max-iters 5000 --epsilon 0 --lambda-u 1e-4"
                      " --lambda-v 1e-4 --seed 3");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const auto report = nlohmann::json::parse(slurp(dir / "e" / "report.json"));
    CHECK(report["rmse"]["model"].get<double>() < 0.05);
}

TEST_CASE("split writes trainable repetitions") {
    const fs::path dir = generated("cli-split");
    REQUIRE(cli("split --manifest " + (dir / "data" / "manifest.json").string() + " --out " + (dir / "s").string() +
                " --repetitions 2 --train-fraction 0.8")
                .code == 0);
    const std::size_t total = count_lines(dir / "data" / "ratings.tsv");
    for (const char* rep : {"rep0", "rep1"}) {
        CHECK(count_lines(dir / "s" / rep / "train.tsv") + count_lines(dir / "s" / rep / "test.tsv") == total);
    }
    CHECK(slurp(dir / "s" / "rep0" / "test.tsv") != slurp(dir / "s" / "rep1" / "test.tsv"));
    const Run t = cli("train --manifest " + (dir / "s" / "rep0" / "manifest.json").string() + " --out " +
                      (dir / "t").string() + " --max-iters 3");
    CHECK_MESSAGE(t.code == 0, t.output);
}

TEST_CASE("transfer-report prints the headline figures") {
    const Run r = cli("transfer-report --shared-users 4000000 --k 10 --iterations 100 --nnz 80000000000");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("1.16 TB") != std::string::npos);
    CHECK(r.output.find("610.35 MB") != std::string::npos);
    CHECK(r.output.find("5.0%") != std::string::npos);
}

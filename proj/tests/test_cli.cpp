// Integration tests that drive the installed CLI binary end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "imbrisk/dataset.hpp"

namespace fs = std::filesystem;
using namespace imbrisk;

namespace {

const std::string cli = IMBRISK_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " > cli_test_stdout.txt 2> cli_test_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& file) const { return (path / file).string(); }
};

}  // namespace

TEST_CASE("generate is deterministic and validates its arguments") {
    TempDir tmp("cli_generate");
    CHECK(run("generate --out " + tmp / "a.csv" + " --n 100 --d 3 --seed 5") == 0);
    CHECK(run("generate --out " + tmp / "b.csv" + " --n 100 --d 3 --seed 5") == 0);
    CHECK(slurp(tmp / "a.csv") == slurp(tmp / "b.csv"));

    CHECK(run("generate --out " + tmp / "c.csv" + " --positive-rate 0 --seed 1") == 1);
    CHECK(run("generate --out " + tmp / "c.csv") != 0);  // --seed is required
}

TEST_CASE("preprocess, resample, train, score pipeline") {
    TempDir tmp("cli_pipeline");
    REQUIRE(run("generate --out " + tmp / "raw.csv" +
                " --n 300 --d 4 --positive-rate 0.2 --separation 2 --seed 9") == 0);

    CHECK(run("preprocess --in " + tmp / "raw.csv" + " --out " + tmp / "prep.csv" +
              " --stats-out " + tmp / "stats.json") == 0);
    CHECK(run("resample --in " + tmp / "prep.csv" + " --out " + tmp / "balanced.csv" +
              " --method SMOTE --target-positive 0.5 --seed 3") == 0);

    const Dataset balanced = load_csv(tmp / "balanced.csv", "RiskInd");
    CHECK(std::abs(positive_rate(balanced) - 0.5) <=
          1.0 / static_cast<double>(balanced.n_rows()));

    CHECK(run("train --in " + tmp / "raw.csv" + " --model-out " + tmp / "model.json" +
              " --classifier dt") == 0);
    CHECK(run("score --model " + tmp / "model.json" + " --in " + tmp / "raw.csv" +
              " --out " + tmp / "scored.csv") == 0);

    // The scored file appends exactly one column and preserves row order.
    std::ifstream raw(tmp / "raw.csv");
    std::ifstream scored(tmp / "scored.csv");
    std::string raw_line;
    std::string scored_line;
    std::getline(raw, raw_line);
    std::getline(scored, scored_line);
    CHECK(scored_line == raw_line + ",score");
    std::size_t rows = 0;
    while (std::getline(raw, raw_line)) {
        REQUIRE(std::getline(scored, scored_line));
        CHECK(scored_line.substr(0, raw_line.size() + 1) == raw_line + ",");
        const double score = std::stod(scored_line.substr(raw_line.size() + 1));
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
        ++rows;
    }
    CHECK(rows == 300);
}

TEST_CASE("usage and data errors map to the documented exit codes") {
    TempDir tmp("cli_errors");
    REQUIRE(run("generate --out " + tmp / "ok.csv" + " --n 60 --d 2 --seed 2") == 0);

    // Unknown method: usage error.
    CHECK(run("resample --in " + tmp / "ok.csv" + " --out " + tmp / "x.csv" +
              " --method WRONG --target-positive 0.5 --seed 1") == 1);
    // Unreadable input: data error.
    CHECK(run("train --in " + tmp / "nope.csv" + " --model-out " + tmp / "m.json" +
              " --classifier dt") == 2);
    // Unknown flag: CLI parse failure.
    CHECK(run("generate --bogus 1") != 0);
    // Missing subcommand.
    CHECK(run("") != 0);
    // Help succeeds for every subcommand.
    for (const char* sub :
         {"generate", "preprocess", "resample", "train", "score", "experiment", "report"}) {
        CHECK(run(std::string(sub) + " --help") == 0);
    }
}

TEST_CASE("experiment consumes resampled CSVs and report summarizes the output") {
    TempDir tmp("cli_experiment");
    REQUIRE(run("generate --out " + tmp / "raw.csv" +
                " --n 200 --d 3 --positive-rate 0.2 --separation 2 --seed 4") == 0);
    REQUIRE(run("resample --in " + tmp / "raw.csv" + " --out " + tmp / "res.csv" +
                " --method ROS --target-positive 0.3 --seed 5") == 0);

    std::ofstream cfg(tmp / "config.json");
    cfg << R"({
        "seed": 21,
        "data": {"csv": {"path": ")" << tmp / "res.csv" << R"("}},
        "folds": 3,
        "ratios": [0.5],
        "methods": ["SMOTE"],
        "classifiers": ["DT"],
        "hyper": {"bagging_estimators": 4, "boosting_estimators": 4},
        "output_dir": ")" << tmp / "out" << R"("
    })";
    cfg.close();

    CHECK(run("experiment --config " + tmp / "config.json") == 0);
    CHECK(fs::exists(tmp / "out" / "report.json"));
    CHECK(fs::exists(tmp / "out" / "grid.csv"));
    CHECK(fs::exists(tmp / "out" / "model_optimal.json"));
    CHECK(fs::exists(tmp / "out" / "pca_SMOTE.csv"));

    CHECK(run("report --report " + tmp / "out" / "report.json") == 0);
    const std::string summary = slurp("cli_test_stdout.txt");
    CHECK(summary.find("optimal model:") != std::string::npos);

    // A malformed config names the offending field and exits with code 1.
    std::ofstream bad(tmp / "bad.json");
    bad << R"({"data": {"synthetic": {}}})";
    bad.close();
    CHECK(run("experiment --config " + tmp / "bad.json") == 1);
    CHECK(slurp("cli_test_stderr.txt").find("seed") != std::string::npos);
}

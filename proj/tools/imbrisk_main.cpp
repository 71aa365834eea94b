#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "imbrisk/config.hpp"
#include "imbrisk/dataset.hpp"
#include "imbrisk/errors.hpp"
#include "imbrisk/log.hpp"
#include "imbrisk/model_io.hpp"
#include "imbrisk/report_io.hpp"
#include "imbrisk/rng.hpp"

namespace {

using namespace imbrisk;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct GenerateArgs {
    std::string out;
    std::size_t n = 1000;
    std::size_t d = 10;
    double positive_rate = 0.074;
    double separation = 1.5;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string target = "RiskInd";
};

int cmd_generate(const GenerateArgs& a) {
    const Dataset ds = generate_synthetic(a.n, a.d, a.positive_rate, a.separation, a.seed);
    save_csv(ds, a.out, a.target);
    log_info("wrote " + std::to_string(ds.n_rows()) + " rows to " + a.out);
    return kExitOk;
}

struct PreprocessArgs {
    std::string in;
    std::string out;
    std::string target = "RiskInd";
    std::string missing_token;
    double threshold = 0.70;
    std::string stats_out;
};

int cmd_preprocess(const PreprocessArgs& a) {
    const Dataset ds = load_csv(a.in, a.target, a.missing_token);
    const PreprocessStats stats = fit_preprocess(ds, a.threshold);
    save_csv(apply_preprocess(ds, stats), a.out, a.target, a.missing_token);
    if (!a.stats_out.empty()) save_preprocess_stats(stats, a.stats_out);
    log_info("kept " + std::to_string(stats.kept_names.size()) + " of " +
             std::to_string(ds.n_features()) + " columns");
    return kExitOk;
}

struct ResampleArgs {
    std::string in;
    std::string out;
    std::string method = "SMOTE";
    double target_positive = 0.5;
    int smote_k = 5;
    std::uint64_t seed = 0;
    std::string target = "RiskInd";
    std::string missing_token;
};

int cmd_resample(const ResampleArgs& a) {
    const Dataset ds = load_csv(a.in, a.target, a.missing_token);
    require_trainable(ds);
    ResampleSpec spec;
    spec.method = parse_method(a.method);
    spec.target_positive = a.target_positive;
    spec.smote_k = a.smote_k;
    spec.seed = a.seed;
    const Dataset out = resample(ds, spec);
    save_csv(out, a.out, a.target, a.missing_token);
    log_info("resampled to " + std::to_string(out.n_rows()) + " rows, positive rate " +
             format_double(positive_rate(out)));
    return kExitOk;
}

struct TrainArgs {
    std::string in;
    std::string model_out;
    std::string classifier = "dt";
    std::string target = "RiskInd";
    std::string missing_token;
    double lambda = 0.01;
    int max_depth = 8;
    int min_samples_leaf = 5;
    std::size_t n_estimators = 50;
    std::uint64_t seed = 0;
    bool no_preprocess = false;
};

int cmd_train(const TrainArgs& a) {
    const Dataset raw = load_csv(a.in, a.target, a.missing_token);

    ModelBundle bundle;
    Dataset train;
    if (a.no_preprocess) {
        train = raw;
    } else {
        bundle.preprocess = fit_preprocess(raw);
        train = apply_preprocess(raw, *bundle.preprocess);
    }
    bundle.feature_names = train.feature_names;

    const TreeParams tree_params{a.max_depth, a.min_samples_leaf};
    if (a.classifier == "lr") {
        bundle.model = train_lr(train);
    } else if (a.classifier == "l1lr") {
        bundle.model = train_l1lr(train, a.lambda);
    } else if (a.classifier == "dt") {
        bundle.model = train_tree(train, tree_params);
    } else if (a.classifier == "bagging") {
        bundle.model = bagging_train(train, a.n_estimators, tree_params, a.seed);
    } else if (a.classifier == "boosting") {
        bundle.model = boosting_train(train, a.n_estimators, tree_params, a.seed);
    } else {
        throw ConfigError("unknown classifier '" + a.classifier + "'");
    }
    bundle.label = a.classifier;
    save_model(bundle, a.model_out);
    log_info("saved " + a.classifier + " model to " + a.model_out);
    return kExitOk;
}

struct ScoreArgs {
    std::string model;
    std::string in;
    std::string out;
    std::string missing_token;
};

// Parses every column as a real (unparseable or missing cells become NaN) so
// the bundle can pick the columns it needs by name.
Dataset load_score_table(const std::string& path, const std::string& missing_token) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");

    const auto split = [](const std::string& text) {
        std::vector<std::string> fields;
        std::string field;
        for (char c : text) {
            if (c == ',') {
                fields.push_back(field);
                field.clear();
            } else if (c != '\r') {
                field.push_back(c);
            }
        }
        fields.push_back(field);
        return fields;
    };

    Dataset ds;
    ds.feature_names = split(line);
    std::vector<double> cells;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto fields = split(line);
        if (fields.size() != ds.feature_names.size()) {
            throw DataError("'" + path + "': ragged row " + std::to_string(rows + 2));
        }
        for (const auto& f : fields) {
            if (f == missing_token) {
                cells.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            cells.push_back(end != f.c_str() && *end == '\0'
                                ? v
                                : std::numeric_limits<double>::quiet_NaN());
        }
        ++rows;
    }
    ds.features = Matrix(rows, ds.feature_names.size());
    ds.features.storage() = std::move(cells);
    ds.labels.assign(rows, 0);
    return ds;
}

int cmd_score(const ScoreArgs& a) {
    const ModelBundle bundle = load_model(a.model);
    const Dataset table = load_score_table(a.in, a.missing_token);
    const std::vector<double> scores = bundle_scores(bundle, table);

    std::ifstream in(a.in);
    if (!in) throw DataError("cannot open '" + a.in + "'");
    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write '" + a.out + "'");

    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << line << ",score\n";
    std::size_t i = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out << line << ',' << format_double(scores.at(i++)) << '\n';
    }
    log_info("scored " + std::to_string(i) + " rows into " + a.out);
    return kExitOk;
}

struct ExperimentArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> folds;
};

int cmd_experiment(const ExperimentArgs& a) {
    RunConfig cfg = load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (a.output_dir) cfg.output_dir = *a.output_dir;
    if (a.workers) cfg.workers = *a.workers;
    if (a.folds) {
        if (*a.folds < 2) throw ConfigError("--folds must be at least 2");
        cfg.folds = *a.folds;
    }
    const auto outputs = run_experiment(cfg);
    std::cout << render_report_summary(outputs.report_path.string());
    std::cout << "outputs written to " << outputs.output_dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"imbrisk: imbalanced risk modeling workflow"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic two-class CSV");
    generate->add_option("--out", gen.out, "output CSV path")->required();
    generate->add_option("--n", gen.n, "row count (>= 20)");
    generate->add_option("--d", gen.d, "feature count (>= 2)");
    generate->add_option("--positive-rate", gen.positive_rate, "positive fraction in (0,1)");
    generate->add_option("--separation", gen.separation, "class mean distance");
    generate->add_option("--seed", gen.seed, "RNG seed")->required();
    generate->add_option("--target-name", gen.target, "target column name");

    PreprocessArgs pre;
    auto* preprocess =
        app.add_subcommand("preprocess", "Drop sparse columns, impute, standardize");
    preprocess->add_option("--in", pre.in, "input CSV")->required();
    preprocess->add_option("--out", pre.out, "output CSV")->required();
    preprocess->add_option("--target", pre.target, "target column name");
    preprocess->add_option("--missing-token", pre.missing_token, "missing-cell token");
    preprocess->add_option("--threshold", pre.threshold,
                           "drop columns with missing fraction above this");
    preprocess->add_option("--stats-out", pre.stats_out, "also save fitted stats (JSON)");

    ResampleArgs rs;
    auto* resample_cmd =
        app.add_subcommand("resample", "Resample a CSV to a target positive fraction");
    resample_cmd->add_option("--in", rs.in, "input CSV")->required();
    resample_cmd->add_option("--out", rs.out, "output CSV")->required();
    resample_cmd->add_option("--method", rs.method, "RUS|CCUS|ROS|SMOTE")->required();
    resample_cmd->add_option("--target-positive", rs.target_positive,
                             "target positive fraction in (0,1)")
        ->required();
    resample_cmd->add_option("--smote-k", rs.smote_k, "SMOTE neighbor count");
    resample_cmd->add_option("--seed", rs.seed, "RNG seed")->required();
    resample_cmd->add_option("--target", rs.target, "target column name");
    resample_cmd->add_option("--missing-token", rs.missing_token, "missing-cell token");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train one classifier on a CSV");
    train_cmd->add_option("--in", tr.in, "input CSV")->required();
    train_cmd->add_option("--model-out", tr.model_out, "output model file")->required();
    train_cmd->add_option("--classifier", tr.classifier, "lr|l1lr|dt|bagging|boosting")
        ->required();
    train_cmd->add_option("--target", tr.target, "target column name");
    train_cmd->add_option("--missing-token", tr.missing_token, "missing-cell token");
    train_cmd->add_option("--lambda", tr.lambda, "L1 penalty (l1lr)");
    train_cmd->add_option("--max-depth", tr.max_depth, "tree depth limit");
    train_cmd->add_option("--min-samples-leaf", tr.min_samples_leaf, "leaf size floor");
    train_cmd->add_option("--n-estimators", tr.n_estimators, "ensemble size");
    train_cmd->add_option("--seed", tr.seed, "RNG seed (bagging)");
    train_cmd->add_flag("--no-preprocess", tr.no_preprocess,
                        "train on the file as-is, without imputation/standardization");

    ScoreArgs sc;
    auto* score_cmd = app.add_subcommand("score", "Append model scores to a CSV");
    score_cmd->add_option("--model", sc.model, "model file")->required();
    score_cmd->add_option("--in", sc.in, "input CSV")->required();
    score_cmd->add_option("--out", sc.out, "output CSV")->required();
    score_cmd->add_option("--missing-token", sc.missing_token, "missing-cell token");

    ExperimentArgs ex;
    auto* experiment_cmd =
        app.add_subcommand("experiment", "Run the five-stage workflow from a config file");
    experiment_cmd->add_option("--config", ex.config, "config JSON path")->required();
    experiment_cmd->add_option("--seed", ex.seed, "override config seed");
    experiment_cmd->add_option("--output-dir", ex.output_dir, "override output directory");
    experiment_cmd->add_option("--workers", ex.workers, "override worker count");
    experiment_cmd->add_option("--folds", ex.folds, "override fold count");

    std::string report_path;
    auto* report_cmd = app.add_subcommand("report", "Summarize a written report.json");
    report_cmd->add_option("--report", report_path, "report.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*generate) return cmd_generate(gen);
        if (*preprocess) return cmd_preprocess(pre);
        if (*resample_cmd) return cmd_resample(rs);
        if (*train_cmd) return cmd_train(tr);
        if (*score_cmd) return cmd_score(sc);
        if (*experiment_cmd) return cmd_experiment(ex);
        if (*report_cmd) {
            std::cout << render_report_summary(report_path);
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}

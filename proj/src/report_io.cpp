#include "imbrisk/report_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "imbrisk/errors.hpp"
#include "imbrisk/log.hpp"
#include "imbrisk/model_io.hpp"
#include "imbrisk/rng.hpp"

namespace imbrisk {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json opt_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json metric_json(const std::optional<MetricSet>& m) {
    if (!m) return nullptr;
    return {{"auc", opt_json(m->auc)},
            {"recall", opt_json(m->recall)},
            {"precision", opt_json(m->precision)},
            {"f1", opt_json(m->f1)},
            {"threshold", m->threshold},
            {"counts",
             {{"tp", m->counts.tp},
              {"fp", m->counts.fp},
              {"tn", m->counts.tn},
              {"fn", m->counts.fn}}}};
}

ordered_json cell_json(const GridCell& cell) {
    ordered_json j;
    j["classifier"] = classifier_name(cell.classifier);
    j["method"] = method_name(cell.method);
    j["target_positive"] = cell.target_positive;
    j["mean_auc"] = opt_json(cell.mean_auc);
    j["mean_recall"] = opt_json(cell.mean_recall);
    j["mean_precision"] = opt_json(cell.mean_precision);
    j["mean_f1"] = opt_json(cell.mean_f1);
    j["folds_used"] = cell.folds_used;
    auto per_fold = ordered_json::array();
    for (const auto& m : cell.per_fold_metrics) per_fold.push_back(metric_json(m));
    j["per_fold"] = per_fold;
    if (cell.classifier == ClassifierKind::L1LR) {
        auto lambdas = ordered_json::array();
        for (const auto& l : cell.fold_lambda) lambdas.push_back(opt_json(l));
        j["lambda_per_fold"] = lambdas;
    }
    if (cell.classifier == ClassifierKind::Boosting) {
        j["epsilon_trace_per_fold"] = cell.fold_epsilons;
        j["weak_learner_warning"] = cell.weak_learner_warning;
    }
    return j;
}

std::string csv_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("error while writing '" + path.string() + "'");
}

void write_grid_csv(const std::filesystem::path& path, const ExperimentReport& report) {
    std::ostringstream out;
    out << "classifier,method,target_positive,mean_auc,mean_recall,mean_precision,"
           "mean_f1,folds_used\n";
    const auto row = [&](const GridCell& cell) {
        out << classifier_name(cell.classifier) << ',' << method_name(cell.method) << ','
            << format_double(cell.target_positive) << ',' << csv_opt(cell.mean_auc) << ','
            << csv_opt(cell.mean_recall) << ',' << csv_opt(cell.mean_precision) << ','
            << csv_opt(cell.mean_f1) << ',' << cell.folds_used << '\n';
    };
    for (const auto& cell : report.grid) row(cell);
    for (const auto& cell : report.ensemble_cells) row(cell);
    write_text(path, out.str());
}

void write_roc_csv(const std::filesystem::path& path, const std::vector<ScoredRow>& rows) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(rows.size());
    labels.reserve(rows.size());
    for (const auto& r : rows) {
        scores.push_back(r.score);
        labels.push_back(r.label);
    }
    std::ostringstream out;
    out << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : roc_points(scores, labels)) {
        out << format_double(fpr) << ',' << format_double(tpr) << '\n';
    }
    write_text(path, out.str());
}

void write_importance_csv(const std::filesystem::path& path,
                          const ExperimentReport& report) {
    std::ostringstream out;
    out << "feature,score\n";
    for (const auto& [name, score] : report.importance_ranking) {
        out << name << ',' << format_double(score) << '\n';
    }
    write_text(path, out.str());
}

void write_pca_csv(const std::filesystem::path& path, const Dataset& ds) {
    const Pca2Result pca = pca2(ds);
    std::ostringstream out;
    out << "pc1,pc2,label\n";
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        out << format_double(pca.projections(i, 0)) << ','
            << format_double(pca.projections(i, 1)) << ',' << ds.labels[i] << '\n';
    }
    write_text(path, out.str());
}

}  // namespace

std::string sanitize_label(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (c == '%') {
            out += "pct";
        } else if (c == '.') {
            out += '_';
        } else {
            out += c;
        }
    }
    return out;
}

ExperimentOutputs run_experiment(const RunConfig& cfg) {
    std::size_t workers = cfg.workers;
    if (workers == 0) {
        workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    const Dataset ds = load_config_dataset(cfg);
    check_dataset(ds);
    log_info("dataset: " + std::to_string(ds.n_rows()) + " rows, " +
             std::to_string(ds.n_features()) + " features, positive rate " +
             format_double(positive_rate(ds)));

    ExperimentOutputs outputs;
    outputs.plan = stratified_kfold(ds, cfg.folds, derive_seed(cfg.seed, "folds"));

    log_info("stage 1-3: grid over " + std::to_string(cfg.methods.size()) + " methods x " +
             std::to_string(cfg.ratios.size()) + " ratios x " +
             std::to_string(cfg.classifiers.size()) + " classifiers, k=" +
             std::to_string(cfg.folds) + " (workers: " + std::to_string(workers) + ")");
    outputs.grid_run = run_grid(ds, outputs.plan, cfg.ratios, cfg.methods, cfg.classifiers,
                                cfg.hyper, cfg.seed, workers);

    const auto best = select_best(outputs.grid_run.cells);
    const bool has_dt = best.contains(ClassifierKind::DT);
    if (has_dt) {
        const auto& dt_best = best.at(ClassifierKind::DT);
        log_info("stage 4: ensembles on DT-best (" + method_name(dt_best.method) + " @ " +
                 format_double(dt_best.ratio) + ")");
        outputs.ensemble_run = run_ensemble_stage(ds, outputs.plan, dt_best, cfg.hyper,
                                                  cfg.seed, workers);
    } else {
        log_warn("DT not among the classifiers; skipping the ensemble stage");
    }

    outputs.report = finalize(outputs.grid_run, outputs.ensemble_run, ds, outputs.plan,
                              cfg.hyper, cfg.seed);
    if (!has_dt) {
        outputs.report.warnings.push_back("ensemble stage skipped: DT not configured");
    }
    log_info("stage 5: optimal model " + outputs.report.optimal.label);

    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    outputs.output_dir = dir;

    ordered_json j;
    j["format"] = "imbrisk-report";
    j["version"] = 1;
    j["config"] = config_echo(cfg);
    j["dataset"] = {{"rows", ds.n_rows()},
                    {"features", ds.n_features()},
                    {"positive_rate", positive_rate(ds)},
                    {"source", cfg.csv ? "csv:" + cfg.csv->path : "synthetic"}};
    j["fold_plan"] = {{"k", outputs.plan.k}, {"seed", outputs.plan.seed}};

    auto grid = ordered_json::array();
    for (const auto& cell : outputs.report.grid) grid.push_back(cell_json(cell));
    j["grid"] = grid;

    ordered_json best_json;
    for (const auto& [clf, choice] : outputs.report.best_per_classifier) {
        const auto& cell = outputs.report.grid[choice.cell_index];
        best_json[classifier_name(clf)] = {
            {"label", model_label(clf, choice.method, choice.ratio,
                                  outputs.report.original_rate)},
            {"method", method_name(choice.method)},
            {"target_positive", choice.ratio},
            {"mean_auc", opt_json(cell.mean_auc)},
            {"mean_recall", opt_json(cell.mean_recall)},
            {"mean_f1", opt_json(cell.mean_f1)}};
    }
    j["best_per_classifier"] = best_json;

    auto ens = ordered_json::array();
    for (const auto& cell : outputs.report.ensemble_cells) ens.push_back(cell_json(cell));
    j["ensemble"] = ens;

    j["optimal_model"] = {{"label", outputs.report.optimal.label},
                          {"classifier", classifier_name(outputs.report.optimal.classifier)},
                          {"method", method_name(outputs.report.optimal.method)},
                          {"target_positive", outputs.report.optimal.ratio},
                          {"mean_auc", opt_json(outputs.report.optimal.mean_auc)},
                          {"mean_recall", opt_json(outputs.report.optimal.mean_recall)},
                          {"mean_f1", opt_json(outputs.report.optimal.mean_f1)},
                          {"importance_kind", outputs.report.importance_kind},
                          {"lambda", opt_json(outputs.report.refit.lambda_used)}};

    auto ranking = ordered_json::array();
    for (const auto& [name, score] : outputs.report.importance_ranking) {
        ranking.push_back(ordered_json::array({name, score}));
    }
    j["importance_ranking"] = ranking;
    j["warnings"] = outputs.report.warnings;

    outputs.report_path = dir / "report.json";
    write_text(outputs.report_path, j.dump(2) + "\n");
    write_grid_csv(dir / "grid.csv", outputs.report);
    write_importance_csv(dir / "importance.csv", outputs.report);

    for (const auto& cand : outputs.report.candidates) {
        const auto& scores = cand.is_ensemble
                                 ? outputs.ensemble_run.cell_scores[cand.cell_index]
                                 : outputs.grid_run.cell_scores[cand.cell_index];
        if (scores.empty()) continue;
        write_roc_csv(dir / ("roc_" + sanitize_label(cand.label) + ".csv"), scores);
    }

    // Figure-4-style projections: each method applied to the fully
    // preprocessed data at the configured ratio.
    const PreprocessStats full_stats = fit_preprocess(ds, cfg.hyper.missing_threshold);
    const Dataset full_p = apply_preprocess(ds, full_stats);
    for (Method m : cfg.methods) {
        ResampleSpec spec;
        spec.method = m;
        spec.target_positive = cfg.pca_ratio;
        spec.smote_k = cfg.hyper.smote_k;
        spec.kmeans_max_iter = cfg.hyper.kmeans_max_iter;
        spec.kmeans_tol = cfg.hyper.kmeans_tol;
        spec.seed = derive_seed(cfg.seed, "pca", method_name(m));
        try {
            write_pca_csv(dir / ("pca_" + method_name(m) + ".csv"), resample(full_p, spec));
        } catch (const std::runtime_error& e) {
            log_warn("pca_" + method_name(m) + ".csv skipped: " + e.what());
        }
    }

    ModelBundle bundle{outputs.report.refit.model, outputs.report.refit.feature_names,
                       outputs.report.refit.stats, outputs.report.optimal.label};
    save_model(bundle, (dir / "model_optimal.json").string());

    return outputs;
}

std::string render_report_summary(const std::string& report_json_path) {
    std::ifstream in(report_json_path);
    if (!in) throw DataError("cannot open report '" + report_json_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report '" + report_json_path + "': " + e.what());
    }
    if (!j.contains("format") || j["format"] != "imbrisk-report") {
        throw DataError("'" + report_json_path + "' is not an experiment report");
    }

    std::ostringstream out;
    const auto num = [](const nlohmann::json& v) {
        if (v.is_null()) return std::string("null");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", v.get<double>());
        return std::string(buf);
    };

    const auto& ds = j.at("dataset");
    out << "dataset: " << ds.at("rows").get<std::size_t>() << " rows, "
        << ds.at("features").get<std::size_t>() << " features, positive rate "
        << num(ds.at("positive_rate")) << " (" << ds.at("source").get<std::string>()
        << ")\n";
    out << "folds: " << j.at("fold_plan").at("k").get<std::size_t>() << ", master seed "
        << j.at("config").at("seed").get<std::uint64_t>() << "\n\n";

    out << "best per classifier:\n";
    for (const auto& [clf, info] : j.at("best_per_classifier").items()) {
        out << "  " << clf << ": " << info.at("label").get<std::string>() << "  auc="
            << num(info.at("mean_auc")) << " recall=" << num(info.at("mean_recall"))
            << " f1=" << num(info.at("mean_f1")) << "\n";
    }
    if (!j.at("ensemble").empty()) {
        out << "ensembles at DT-best:\n";
        for (const auto& cell : j.at("ensemble")) {
            out << "  " << cell.at("classifier").get<std::string>() << ": auc="
                << num(cell.at("mean_auc")) << " recall=" << num(cell.at("mean_recall"))
                << " f1=" << num(cell.at("mean_f1")) << "\n";
        }
    }

    const auto& opt = j.at("optimal_model");
    out << "\noptimal model: " << opt.at("label").get<std::string>() << "\n";
    out << "  auc=" << num(opt.at("mean_auc")) << " recall=" << num(opt.at("mean_recall"))
        << " f1=" << num(opt.at("mean_f1")) << "\n";

    out << "\ntop features (" << opt.at("importance_kind").get<std::string>() << "):\n";
    std::size_t shown = 0;
    for (const auto& entry : j.at("importance_ranking")) {
        if (shown++ == 10) break;
        out << "  " << entry.at(0).get<std::string>() << ": " << num(entry.at(1)) << "\n";
    }
    if (!j.at("warnings").empty()) {
        out << "\nwarnings:\n";
        for (const auto& w : j.at("warnings")) {
            out << "  " << w.get<std::string>() << "\n";
        }
    }
    return out.str();
}

}  // namespace imbrisk

#pragma once

#include <filesystem>
#include <string>

#include "imbrisk/config.hpp"
#include "imbrisk/experiment.hpp"

namespace imbrisk {

struct ExperimentOutputs {
    std::filesystem::path output_dir;
    std::filesystem::path report_path;  // report.json
    ExperimentReport report;
    FoldPlan plan;
    GridRunResult grid_run;
    GridRunResult ensemble_run;
};

/// Runs the five-stage workflow end to end and writes the output directory:
/// report.json, grid.csv, importance.csv, one roc_<label>.csv per selected
/// model, one pca_<method>.csv per resampling method, and the refit optimal
/// model as model_optimal.json. Identical configs produce byte-identical
/// outputs regardless of worker count.
ExperimentOutputs run_experiment(const RunConfig& cfg);

/// Human-readable summary of a written report.json (the `report` subcommand).
std::string render_report_summary(const std::string& report_json_path);

/// File-system-safe form of a model label ("DT_SMOTE_50%" -> "DT_SMOTE_50pct").
std::string sanitize_label(const std::string& label);

}  // namespace imbrisk

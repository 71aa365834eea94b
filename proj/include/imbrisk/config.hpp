#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "imbrisk/experiment.hpp"

namespace imbrisk {

struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t d = 10;
    double positive_rate = 0.074;
    double separation = 1.5;
};

struct CsvSpec {
    std::string path;
    std::string target_column = "RiskInd";
    std::string missing_token;
};

/// Everything an experiment run needs. The seed is mandatory; nothing ever
/// falls back to the wall clock.
struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<CsvSpec> csv;
    std::optional<SyntheticSpec> synthetic;
    std::size_t folds = 10;
    std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<Method> methods{Method::Rus, Method::Ccus, Method::Ros, Method::Smote};
    std::vector<ClassifierKind> classifiers{ClassifierKind::LR, ClassifierKind::L1LR,
                                            ClassifierKind::DT};
    HyperParams hyper;
    double pca_ratio = 0.5;
    std::size_t workers = 0;  // 0 = hardware concurrency
    std::string output_dir = "out";
};

/// Parses and validates; errors name the offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Deterministic echo of the fields that shape the results. Worker count is
/// excluded: it cannot change any output.
nlohmann::ordered_json config_echo(const RunConfig& cfg);

/// Loads the CSV or generates the synthetic dataset named by the config.
Dataset load_config_dataset(const RunConfig& cfg);

}  // namespace imbrisk

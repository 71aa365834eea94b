#include "imbrisk/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "imbrisk/errors.hpp"
#include "imbrisk/rng.hpp"

namespace imbrisk {
namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

double parse_real(const std::string& s, std::size_t line_no, const std::string& col) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
        throw DataError("line " + std::to_string(line_no) + ", column '" + col +
                        "': cannot parse '" + s + "' as a real number");
    }
    return v;
}

}  // namespace

double positive_rate(const Dataset& ds) {
    if (ds.labels.empty()) throw DataError("positive_rate: empty dataset");
    const auto pos = std::count(ds.labels.begin(), ds.labels.end(), 1);
    return static_cast<double>(pos) / static_cast<double>(ds.labels.size());
}

std::vector<std::size_t> positive_indices(const Dataset& ds) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] == 1) idx.push_back(i);
    }
    return idx;
}

std::vector<std::size_t> negative_indices(const Dataset& ds) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (ds.labels[i] == 0) idx.push_back(i);
    }
    return idx;
}

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.features = Matrix(rows.size(), ds.n_features());
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = ds.features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels[i] = ds.labels[rows[i]];
    }
    return out;
}

void check_dataset(const Dataset& ds) {
    if (ds.features.rows() != ds.labels.size()) {
        throw DataError("dataset row count does not match label count");
    }
    if (ds.features.cols() != ds.feature_names.size()) {
        throw DataError("dataset column count does not match feature name count");
    }
    for (int y : ds.labels) {
        if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : ds.feature_names) {
        if (!seen.insert(name).second) {
            throw DataError("duplicate feature name '" + name + "'");
        }
    }
}

void require_trainable(const Dataset& ds) {
    if (ds.n_rows() == 0) throw DataError("cannot train on an empty dataset");
    bool has_pos = false;
    bool has_neg = false;
    for (int y : ds.labels) {
        (y == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
        throw DataError("training requires both classes to be present");
    }
    for (double v : ds.features.storage()) {
        if (!std::isfinite(v)) {
            throw NumericError("training features must be finite (impute missing cells first)");
        }
    }
}

Dataset generate_synthetic(std::size_t n, std::size_t d, double positive_rate,
                           double separation, std::uint64_t seed) {
    if (n < 20) throw ConfigError("generate_synthetic: n must be at least 20");
    if (d < 2) throw ConfigError("generate_synthetic: d must be at least 2");
    if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
        throw ConfigError("generate_synthetic: positive_rate must be strictly inside (0, 1)");
    }
    if (!std::isfinite(separation)) {
        throw ConfigError("generate_synthetic: separation must be finite");
    }

    const auto n_pos = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * positive_rate + 0.5));
    if (n_pos == 0 || n_pos == n) {
        throw ConfigError("generate_synthetic: positive_rate leaves one class empty");
    }

    Rng rng(derive_seed(seed, "synthetic"));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);  // label layout; avoids class-sorted row blocks

    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n_pos; ++i) labels[order[i]] = 1;

    Dataset ds;
    ds.labels = std::move(labels);
    ds.features = Matrix(n, d);
    ds.feature_names.reserve(d);
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j + 1));

    const double half = separation / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = ds.features.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = rng.normal();
        row[0] += ds.labels[i] == 1 ? half : -half;
    }
    return ds;
}

Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::string& missing_token) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");
    const auto header = split_line(line);

    std::size_t target_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == target_column) {
            target_idx = j;
            break;
        }
    }
    if (target_idx == header.size()) {
        throw DataError("'" + path + "': target column '" + target_column + "' not found");
    }

    Dataset ds;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j != target_idx) ds.feature_names.push_back(header[j]);
    }

    std::vector<double> cells;
    std::size_t n_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw DataError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        const std::string& target_cell = fields[target_idx];
        if (target_cell == missing_token) {
            throw DataError("'" + path + "' line " + std::to_string(line_no) +
                            ": missing target value");
        }
        const double y = parse_real(target_cell, line_no, target_column);
        if (y != 0.0 && y != 1.0) {
            throw DataError("'" + path + "' line " + std::to_string(line_no) +
                            ": target value '" + target_cell + "' is not 0 or 1");
        }
        ds.labels.push_back(static_cast<int>(y));
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == target_idx) continue;
            if (fields[j] == missing_token) {
                cells.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                cells.push_back(parse_real(fields[j], line_no, header[j]));
            }
        }
        ++n_rows;
    }

    ds.features = Matrix(n_rows, ds.feature_names.size());
    ds.features.storage() = std::move(cells);
    check_dataset(ds);
    return ds;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& target_column,
              const std::string& missing_token) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");

    for (const auto& name : ds.feature_names) out << name << ',';
    out << target_column << '\n';

    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const auto row = ds.features.row(i);
        for (double v : row) {
            if (std::isnan(v)) {
                out << missing_token;
            } else {
                out << format_double(v);
            }
            out << ',';
        }
        out << ds.labels[i] << '\n';
    }
    if (!out) throw DataError("error while writing '" + path + "'");
}

}  // namespace imbrisk

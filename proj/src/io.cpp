#include "plmcell/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "plmcell/errors.hpp"

namespace plmcell {

void ModelSpec::validate() const {
    if (response.empty()) throw InvalidArgument("no response column named");
    if (linear.empty()) throw InvalidArgument("no linear covariates named");
    if (nonparam_continuous.empty() && nonparam_categorical.empty())
        throw InvalidArgument("no nonparametric covariates named");
    std::set<std::string> seen{response};
    auto check = [&seen](const std::vector<std::string>& names, const char* what) {
        for (const auto& s : names)
            if (!seen.insert(s).second)
                throw InvalidArgument(std::string(what) + " column " + s +
                                      " appears in more than one role");
    };
    check(linear, "linear");
    check(nonparam_continuous, "continuous");
    check(nonparam_categorical, "categorical");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na"; }

double parse_number(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CsvError("non-numeric value '" + s + "' in column " + col + ", row " +
                       std::to_string(row));
    }
}

}  // namespace

Dataset load_csv(const std::string& path, const ModelSpec& spec) {
    spec.validate();
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty file: " + path);
    const std::vector<std::string> header = split_csv_line(line);
    std::map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) col_index[header[i]] = i;

    auto require = [&](const std::string& name) {
        const auto it = col_index.find(name);
        if (it == col_index.end()) throw CsvError("missing column " + name + " in " + path);
        return it->second;
    };
    const std::size_t y_col = require(spec.response);
    std::vector<std::size_t> x_cols, zc_cols, zd_cols;
    for (const auto& c : spec.linear) x_cols.push_back(require(c));
    for (const auto& c : spec.nonparam_continuous) zc_cols.push_back(require(c));
    for (const auto& c : spec.nonparam_categorical) zd_cols.push_back(require(c));

    std::vector<double> y;
    std::vector<std::vector<double>> x(x_cols.size()), zc(zc_cols.size());
    std::vector<std::vector<std::string>> zd_raw(zd_cols.size());
    std::vector<std::size_t> dropped_rows;

    std::size_t row = 1;  // data rows are 1-based; header is row 0
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            ++row;
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        auto at = [&](std::size_t c) -> const std::string& {
            static const std::string empty;
            return c < fields.size() ? fields[c] : empty;
        };
        bool missing = is_missing(at(y_col));
        for (const auto c : x_cols) missing = missing || is_missing(at(c));
        for (const auto c : zc_cols) missing = missing || is_missing(at(c));
        for (const auto c : zd_cols) missing = missing || is_missing(at(c));
        if (missing) {
            dropped_rows.push_back(row);
            ++row;
            continue;
        }
        y.push_back(parse_number(at(y_col), row, spec.response));
        for (std::size_t j = 0; j < x_cols.size(); ++j)
            x[j].push_back(parse_number(at(x_cols[j]), row, spec.linear[j]));
        for (std::size_t j = 0; j < zc_cols.size(); ++j)
            zc[j].push_back(parse_number(at(zc_cols[j]), row, spec.nonparam_continuous[j]));
        for (std::size_t j = 0; j < zd_cols.size(); ++j)
            zd_raw[j].push_back(at(zd_cols[j]));
        ++row;
    }
    if (!dropped_rows.empty()) {
        std::string rows;
        for (std::size_t i = 0; i < dropped_rows.size() && i < 20; ++i)
            rows += (i ? ", " : "") + std::to_string(dropped_rows[i]);
        if (dropped_rows.size() > 20) rows += ", ...";
        throw CsvError("missing values in referenced columns at data row(s) " + rows);
    }
    const std::size_t n = y.size();
    if (n == 0) throw CsvError("no data rows in " + path);

    Dataset ds;
    ds.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x_cols.size()));
    for (std::size_t j = 0; j < x_cols.size(); ++j)
        ds.x.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<Eigen::VectorXd>(x[j].data(), static_cast<Eigen::Index>(n));
    ds.x_names = spec.linear;

    ds.z_continuous.resize(static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(zc_cols.size()));
    for (std::size_t j = 0; j < zc_cols.size(); ++j)
        ds.z_continuous.col(static_cast<Eigen::Index>(j)) =
            Eigen::Map<Eigen::VectorXd>(zc[j].data(), static_cast<Eigen::Index>(n));
    ds.zc_names = spec.nonparam_continuous;

    ds.z_categorical.resize(static_cast<Eigen::Index>(n),
                            static_cast<Eigen::Index>(zd_cols.size()));
    ds.zd_names = spec.nonparam_categorical;
    ds.zd_levels.resize(zd_cols.size());
    for (std::size_t j = 0; j < zd_cols.size(); ++j) {
        std::set<std::string> levels(zd_raw[j].begin(), zd_raw[j].end());
        ds.zd_levels[j].assign(levels.begin(), levels.end());  // lexicographic codes
        std::map<std::string, int> code;
        for (std::size_t k = 0; k < ds.zd_levels[j].size(); ++k)
            code[ds.zd_levels[j][k]] = static_cast<int>(k);
        for (std::size_t i = 0; i < n; ++i)
            ds.z_categorical(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                code[zd_raw[j][i]];
    }
    return ds;
}

ZSpec zspec_from_model(const ModelSpec& spec, const Dataset& ds) {
    ZSpec z;
    z.continuous = spec.nonparam_continuous;
    z.categorical = spec.nonparam_categorical;

    const std::string& name = spec.ordering;
    if (name == "auto") {
        if (!z.categorical.empty())
            z.strategy = Strategy::CategoricalSplit;
        else if (z.continuous.size() == 1)
            z.strategy = Strategy::SingleContinuous;
        else
            z.strategy = Strategy::FirstPrincipalComponent;
    } else if (name.rfind("component:", 0) == 0) {
        z.strategy = Strategy::OrderByComponent;
        z.order_column = name.substr(10);
    } else {
        z.strategy = strategy_from_name(name);
    }
    z.validate(ds);
    return z;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
        if (!out) throw Error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace plmcell

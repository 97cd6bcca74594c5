#include "study.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "plmcell/errors.hpp"
#include "plmcell/io.hpp"
#include "plmcell/rng.hpp"

namespace plmcell::cli {

namespace {

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string item;
    std::stringstream ss(value);
    while (ss >> item) {
        while (!item.empty() && item.back() == ',') item.pop_back();
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

long parse_long(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + s + "'", line);
    }
}

double parse_real(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "'", line);
    }
}

void apply_key(StudyConfig& c, const std::string& key, const std::string& value, int line) {
    if (key == "kind") {
        c.kind = value;
    } else if (key == "example") {
        c.example = example_from_name(value);
    } else if (key == "n") {
        c.n_values.clear();
        for (const auto& s : split_list(value))
            c.n_values.push_back(static_cast<Eigen::Index>(parse_long(s, line)));
    } else if (key == "cell_size") {
        c.cell_sizes.clear();
        for (const auto& s : split_list(value))
            c.cell_sizes.push_back(static_cast<int>(parse_long(s, line)));
    } else if (key == "replicates") {
        c.replicates = static_cast<int>(parse_long(value, line));
    } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(parse_long(value, line));
    } else if (key == "delta") {
        c.delta = parse_real(value, line);
    } else if (key == "deltas") {
        c.deltas.clear();
        for (const auto& s : split_list(value)) c.deltas.push_back(parse_real(s, line));
    } else if (key == "bootstrap") {
        c.bootstrap = static_cast<int>(parse_long(value, line));
    } else if (key == "level") {
        c.level = parse_real(value, line);
    } else if (key == "test") {
        if (value != "t1" && value != "t2")
            throw ConfigError("test must be t1 or t2, got '" + value + "'", line);
        c.test = value;
    } else if (key == "rho") {
        c.rho = parse_real(value, line);
    } else {
        throw ConfigError("unknown key '" + key + "'", line);
    }
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

DgpSpec spec_for(const StudyConfig& c, Eigen::Index n) {
    DgpSpec spec;
    spec.example = c.example;
    spec.n = n;
    spec.rho = c.rho;
    spec.delta = c.delta;
    spec.seed = c.seed;
    if (c.example == Example::Ex3 && c.kind != "power" && c.delta == 0.0)
        spec.delta = 0.25;  // the design's default bump height
    return spec;
}

}  // namespace

std::vector<StudyConfig> parse_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);

    std::vector<StudyConfig> studies;
    StudyConfig* current = nullptr;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trimmed(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            StudyConfig c;
            c.name = trimmed(line.substr(1, line.size() - 2));
            if (c.name.empty()) throw ConfigError("empty section name", line_no);
            studies.push_back(c);
            current = &studies.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
        if (!current) throw ConfigError("key outside of a [section]", line_no);
        apply_key(*current, trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)), line_no);
    }
    if (studies.empty()) throw ConfigError("config file defines no studies");
    for (const auto& s : studies) {
        if (s.kind != "table" && s.kind != "rate" && s.kind != "null" && s.kind != "power")
            throw ConfigError("study '" + s.name + "' has unknown kind '" + s.kind +
                              "'; available kinds: table, rate, null, power");
        if (s.n_values.empty())
            throw ConfigError("study '" + s.name + "' names no sample sizes (key n)");
        if (s.cell_sizes.empty())
            throw ConfigError("study '" + s.name + "' names no cell sizes (key cell_size)");
    }
    return studies;
}

namespace {

nlohmann::json run_table_study(const StudyConfig& c, const std::string& out_dir, int threads) {
    std::string csv =
        "n,I,replicates,ase_mean,ase_sd,mse_mean,rsd";
    for (int j = 1; j <= 6; ++j)
        csv += ",beta" + std::to_string(j) + "_mean,beta" + std::to_string(j) +
               "_sd,beta" + std::to_string(j) + "_se_median,beta" + std::to_string(j) +
               "_se_mad";
    csv += "\n";
    for (const auto n : c.n_values) {
        for (const int i_sz : c.cell_sizes) {
            const McResult r = run_mc(spec_for(c, n), i_sz, c.replicates, threads);
            csv += std::to_string(n) + "," + std::to_string(i_sz) + "," +
                   std::to_string(c.replicates) + "," + format_double(r.ase_mean) + "," +
                   format_double(r.ase_sd) + "," + format_double(r.mse_mean) + "," +
                   format_double(r.rsd);
            for (Eigen::Index j = 0; j < r.per_coef_mean.size(); ++j)
                csv += "," + format_double(r.per_coef_mean(j)) + "," +
                       format_double(r.per_coef_sd(j)) + "," +
                       format_double(r.per_coef_sdm(j)) + "," +
                       format_double(r.per_coef_sdmad(j));
            csv += "\n";
        }
    }
    const std::string file = c.name + ".csv";
    write_file_atomic(out_path(out_dir, file), csv);
    return {{"files", {file}}};
}

nlohmann::json run_rate_study(const StudyConfig& c, const std::string& out_dir, int threads) {
    std::vector<std::vector<double>> mse(c.n_values.size(),
                                         std::vector<double>(c.cell_sizes.size()));
    std::string csv = "n,I,replicates,mse_mean,log_mse_minus_log_factor\n";
    for (std::size_t a = 0; a < c.n_values.size(); ++a) {
        for (std::size_t b = 0; b < c.cell_sizes.size(); ++b) {
            const McResult r =
                run_mc(spec_for(c, c.n_values[a]), c.cell_sizes[b], c.replicates, threads);
            mse[a][b] = r.mse_mean;
            const double i_sz = c.cell_sizes[b];
            csv += std::to_string(c.n_values[a]) + "," + std::to_string(c.cell_sizes[b]) + "," +
                   std::to_string(c.replicates) + "," + format_double(r.mse_mean) + "," +
                   format_double(std::log(r.mse_mean) - std::log(i_sz / (i_sz - 1.0))) + "\n";
        }
    }
    const double slope = mse_rate_slope(c.n_values, c.cell_sizes, mse);
    const std::string file = c.name + ".csv";
    write_file_atomic(out_path(out_dir, file), csv);
    return {{"files", {file}}, {"log_log_slope", slope}};
}

nlohmann::json run_null_study(const StudyConfig& c, const std::string& out_dir, int threads) {
    nlohmann::json per_n = nlohmann::json::array();
    nlohmann::json files = nlohmann::json::array();
    for (const auto n : c.n_values) {
        for (const int i_sz : c.cell_sizes) {
            const NullStudyResult r =
                null_distribution_study(spec_for(c, n), i_sz, c.replicates, threads);
            std::string csv = "scaled_statistic\n";
            for (const double s : r.scaled_stats) csv += format_double(s) + "\n";
            const std::string file =
                c.name + "_n" + std::to_string(n) + "_I" + std::to_string(i_sz) + ".csv";
            write_file_atomic(out_path(out_dir, file), csv);
            files.push_back(file);
            per_n.push_back({{"n", n},
                             {"I", i_sz},
                             {"ks_distance", r.ks_distance},
                             {"df", r.df},
                             {"rejection_at_5pct", r.rejection_at_5pct}});
        }
    }
    return {{"files", files}, {"results", per_n}};
}

nlohmann::json run_power_study(const StudyConfig& c, const std::string& out_dir, int threads) {
    if (c.deltas.empty())
        throw ConfigError("power study '" + c.name + "' names no deltas");
    const TestKind kind = c.test == "t1" ? TestKind::LinearT1 : TestKind::CurveT2;
    std::string csv = "n,I,delta,rate_asymptotic,rate_bootstrap\n";
    for (const auto n : c.n_values) {
        for (const int i_sz : c.cell_sizes) {
            DgpSpec spec = spec_for(c, n);
            spec.seed = rng::derive_seed(c.seed, static_cast<std::uint64_t>(n) * 1000 +
                                                     static_cast<std::uint64_t>(i_sz));
            const auto points =
                power_curve(spec, kind, c.deltas, i_sz, c.replicates, c.bootstrap, c.level,
                            threads);
            for (const auto& pt : points)
                csv += std::to_string(n) + "," + std::to_string(i_sz) + "," +
                       format_double(pt.delta) + "," +
                       (std::isnan(pt.rate_asymptotic) ? std::string()
                                                       : format_double(pt.rate_asymptotic)) +
                       "," + format_double(pt.rate_bootstrap) + "\n";
        }
    }
    const std::string file = c.name + ".csv";
    write_file_atomic(out_path(out_dir, file), csv);
    return {{"files", {file}}};
}

}  // namespace

nlohmann::json run_study(const StudyConfig& c, const std::string& out_dir, int threads) {
    const auto start = std::chrono::steady_clock::now();
    nlohmann::json result;
    if (c.kind == "table")
        result = run_table_study(c, out_dir, threads);
    else if (c.kind == "rate")
        result = run_rate_study(c, out_dir, threads);
    else if (c.kind == "null")
        result = run_null_study(c, out_dir, threads);
    else
        result = run_power_study(c, out_dir, threads);
    const auto end = std::chrono::steady_clock::now();
    result["study"] = c.name;
    result["kind"] = c.kind;
    result["example"] = example_name(c.example);
    result["seed"] = c.seed;
    result["replicates"] = c.replicates;
    result["wall_time_s"] = std::chrono::duration<double>(end - start).count();
    return result;
}

}  // namespace plmcell::cli

#include "common.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "plmcell/errors.hpp"

namespace plmcell::cli {

LoadedModel load_model(const DataOptions& opts) {
    LoadedModel lm;
    lm.dataset = load_csv(opts.data_path, opts.model);
    lm.dataset.validate();

    // There is no intercept column: the cell means absorb it, and a constant
    // column would make the centered Gram singular.
    for (Eigen::Index j = 0; j < lm.dataset.p(); ++j) {
        const Eigen::VectorXd col = lm.dataset.x.col(j);
        if (col.maxCoeff() == col.minCoeff())
            throw InvalidArgument(
                "linear column " + lm.dataset.x_names[static_cast<std::size_t>(j)] +
                " is constant; drop it -- intercepts are absorbed by the cell means");
    }

    lm.zspec = zspec_from_model(opts.model, lm.dataset);
    lm.plan = make_partition(lm.dataset, lm.zspec, opts.model.cell_size);
    for (const auto& w : lm.plan.warnings) std::cerr << "warning: " << w << "\n";
    return lm;
}

nlohmann::json fit_report_json(const DataOptions& opts, const LoadedModel& lm, const PlmFit& f) {
    nlohmann::json coefs = nlohmann::json::array();
    const Eigen::VectorXd se = f.std_errors();
    for (Eigen::Index j = 0; j < f.beta.size(); ++j) {
        coefs.push_back({{"name", lm.dataset.x_names[static_cast<std::size_t>(j)]},
                         {"estimate", f.beta(j)},
                         {"std_error", se(j)},
                         {"z", se(j) > 0.0 ? f.beta(j) / se(j) : 0.0}});
    }
    nlohmann::json j{{"command", "fit"},
                     {"n", lm.dataset.n()},
                     {"p", lm.dataset.p()},
                     {"n_cells", f.plan.n_cells()},
                     {"cell_size", opts.model.cell_size},
                     {"ordering", strategy_name(lm.zspec.strategy)},
                     {"coefficients", coefs},
                     {"sigma2", f.sigma2},
                     {"rss", f.rss},
                     {"dof", f.dof()},
                     {"seed", opts.seed}};
    if (!lm.plan.warnings.empty()) j["warnings"] = lm.plan.warnings;
    return j;
}

nlohmann::json test_report_json(const TestReport& report) {
    nlohmann::json j{{"statistic", report.statistic},
                     {"scaled_statistic", report.scaled_statistic},
                     {"sided", sided_name(report.sided)},
                     {"n_bootstrap", report.n_bootstrap},
                     {"seed", report.seed}};
    if (report.df > 0) j["df"] = report.df;
    if (report.p_asymptotic) j["p_asymptotic"] = *report.p_asymptotic;
    if (report.p_bootstrap) j["p_bootstrap"] = *report.p_bootstrap;
    return j;
}

LinearHypothesis parse_constraints(const std::string& spec, const Dataset& ds) {
    std::vector<Eigen::Index> rows;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        std::string name = eq == std::string::npos ? item : item.substr(0, eq);
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        if (eq != std::string::npos) {
            const std::string rhs = item.substr(eq + 1);
            if (std::stod(rhs) != 0.0)
                throw InvalidArgument("only '= 0' constraints are supported: " + item);
        }
        Eigen::Index idx = -1;
        for (std::size_t j = 0; j < ds.x_names.size(); ++j)
            if (ds.x_names[j] == name) idx = static_cast<Eigen::Index>(j);
        if (idx < 0) throw InvalidArgument("unknown coefficient in constraint: " + name);
        rows.push_back(idx);
    }
    if (rows.empty()) throw InvalidArgument("empty constraint specification");
    LinearHypothesis hyp;
    hyp.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), ds.p());
    for (std::size_t r = 0; r < rows.size(); ++r)
        hyp.a(static_cast<Eigen::Index>(r), rows[r]) = 1.0;
    return hyp;
}

LinearHypothesis load_constraint_file(const std::string& path, Eigen::Index p) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open constraint file " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (row.empty()) continue;
        if (static_cast<Eigen::Index>(row.size()) != p)
            throw InvalidArgument("constraint row has " + std::to_string(row.size()) +
                                  " entries, expected " + std::to_string(p));
        rows.push_back(row);
    }
    if (rows.empty()) throw InvalidArgument("constraint file is empty");
    LinearHypothesis hyp;
    hyp.a.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (Eigen::Index c = 0; c < p; ++c)
            hyp.a(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    return hyp;
}

std::string out_path(const std::string& out_dir, const std::string& name) {
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / name).string();
}

std::string curves_csv(const std::vector<CurveEstimate>& curves) {
    std::string text = "level,grid,ghat,var_ghat\n";
    for (const auto& c : curves) {
        const std::string label = c.level_label.empty() ? std::to_string(c.level) : c.level_label;
        for (Eigen::Index g = 0; g < c.grid.size(); ++g)
            text += label + "," + format_double(c.grid(g)) + "," + format_double(c.ghat(g)) +
                    "," + format_double(c.var_ghat(g)) + "\n";
    }
    return text;
}

void emit_report(const nlohmann::json& report, const std::string& out_dir,
                 const std::string& filename) {
    std::cout << report.dump(2) << "\n";
    if (!out_dir.empty()) write_file_atomic(out_path(out_dir, filename), report.dump(2) + "\n");
}

}  // namespace plmcell::cli

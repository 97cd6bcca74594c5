#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "common.hpp"
#include "plmcell/errors.hpp"
#include "plmcell/io.hpp"
#include "plmcell/rng.hpp"
#include "study.hpp"

namespace {

using namespace plmcell;
using namespace plmcell::cli;

std::vector<std::string> split_names(const std::string& csv) {
    std::vector<std::string> names;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        names.push_back(item.substr(b, e - b + 1));
    }
    return names;
}

struct CommonFlags {
    std::string data, response, linear, nonparam, categorical, order_by = "auto", out;
    int cell_size = 5;
    std::uint64_t seed = 0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--data", f.data, "input CSV file")->required();
    cmd->add_option("--response", f.response, "response column")->required();
    cmd->add_option("--linear", f.linear, "comma-separated linear covariates")->required();
    cmd->add_option("--nonparam", f.nonparam, "comma-separated continuous Z columns");
    cmd->add_option("--categorical", f.categorical, "comma-separated categorical Z columns");
    cmd->add_option("--cell-size", f.cell_size, "observations per cell (I >= 2)");
    cmd->add_option("--order-by", f.order_by,
                    "ordering strategy: auto|single|categorical-split|pca|distinct|"
                    "component:<name>");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--out", f.out, "output directory (reports also go to stdout)");
    cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
}

DataOptions to_options(const CommonFlags& f) {
    DataOptions opts;
    opts.data_path = f.data;
    opts.model.response = f.response;
    opts.model.linear = split_names(f.linear);
    opts.model.nonparam_continuous = split_names(f.nonparam);
    opts.model.nonparam_categorical = split_names(f.categorical);
    opts.model.cell_size = f.cell_size;
    opts.model.ordering = f.order_by;
    opts.seed = f.seed;
    opts.out_dir = f.out;
    opts.threads = f.threads;
    return opts;
}

int cmd_fit(const CommonFlags& flags, bool with_curve, int grid_points,
            const std::string& kernel_name_arg, const std::string& bandwidth_arg) {
    const DataOptions opts = to_options(flags);
    const LoadedModel lm = load_model(opts);
    const PlmFit f = fit(lm.dataset, lm.plan);
    nlohmann::json report = fit_report_json(opts, lm, f);

    if (with_curve) {
        if (lm.zspec.continuous.size() != 1)
            throw InvalidArgument("--curve needs exactly one continuous Z column");
        const Eigen::VectorXd y_star = residualize(lm.dataset, f);
        const KernelSpec kernel = KernelSpec::make(kernel_from_name(kernel_name_arg));
        const int zc = lm.dataset.zc_index(lm.zspec.continuous[0]);
        const Eigen::VectorXd x_all = lm.dataset.z_continuous.col(zc);

        std::vector<CurveEstimate> curves;
        const bool grouped = !lm.zspec.categorical.empty();
        int n_levels = 1;
        int zd = -1;
        if (grouped) {
            zd = lm.dataset.zd_index(lm.zspec.categorical[0]);
            n_levels = static_cast<int>(lm.dataset.zd_levels[static_cast<std::size_t>(zd)].size());
        }
        for (int level = 0; level < n_levels; ++level) {
            std::vector<double> xs, ys;
            for (Eigen::Index i = 0; i < lm.dataset.n(); ++i) {
                if (grouped && lm.dataset.z_categorical(i, zd) != level) continue;
                xs.push_back(x_all(i));
                ys.push_back(y_star(i));
            }
            const Eigen::VectorXd xv =
                Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
            const Eigen::VectorXd yv =
                Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
            double h;
            if (bandwidth_arg == "gcv")
                h = gcv_bandwidth(xv, yv, 2, kernel, default_bandwidth_grid(xv));
            else
                h = std::stod(bandwidth_arg);
            CurveEstimate c = local_poly_fit(xv, yv, 2, h, kernel,
                                             default_grid(xv, grid_points));
            c.level = grouped ? level : -1;
            if (grouped)
                c.level_label =
                    lm.dataset.zd_levels[static_cast<std::size_t>(zd)][static_cast<std::size_t>(level)];
            curves.push_back(std::move(c));
        }
        if (!opts.out_dir.empty()) {
            write_file_atomic(out_path(opts.out_dir, "curves.csv"), curves_csv(curves));
            report["curve_file"] = "curves.csv";
        }
    }
    emit_report(report, opts.out_dir, "fit_report.json");
    return 0;
}

int cmd_test_linear(const CommonFlags& flags, const std::string& constrain,
                    const std::string& constrain_file, int n_bootstrap) {
    const DataOptions opts = to_options(flags);
    const LoadedModel lm = load_model(opts);
    const LinearHypothesis hyp = constrain_file.empty()
                                     ? parse_constraints(constrain, lm.dataset)
                                     : load_constraint_file(constrain_file, lm.dataset.p());
    const TestReport rep =
        t1_test(lm.dataset, lm.plan, hyp, n_bootstrap, opts.seed, opts.threads);
    nlohmann::json report = test_report_json(rep);
    report["command"] = "test-linear";
    report["k"] = static_cast<int>(hyp.k());
    emit_report(report, opts.out_dir, "test_linear_report.json");
    return 0;
}

int cmd_test_curves(const CommonFlags& flags, int n_bootstrap, const std::string& sided_arg,
                    const std::string& kernel_arg, const std::string& bandwidth_arg,
                    double undersmooth, double band_alpha, int grid_points) {
    const DataOptions opts = to_options(flags);
    const LoadedModel lm = load_model(opts);
    const PlmFit f = fit(lm.dataset, lm.plan);

    CurveTestConfig config;
    config.kernel = kernel_from_name(kernel_arg);
    config.undersmooth = undersmooth;
    config.grid_points = grid_points;
    config.threads = opts.threads;
    if (bandwidth_arg != "gcv") config.fixed_bandwidth = std::stod(bandwidth_arg);

    const CurveTestResult res = t2_test(lm.dataset, lm.zspec, f, config, n_bootstrap, opts.seed,
                                        sided_from_name(sided_arg));
    nlohmann::json report = test_report_json(res.report);
    report["command"] = "test-curves";
    report["bandwidth"] = res.h;
    report["bandwidth_gcv"] = res.h_gcv;
    report["dn"] = res.dn;
    report["kernel"] = kernel_arg;
    report["group_sizes"] = {res.group_sizes[0], res.group_sizes[1]};
    report["group_levels"] = {res.curve0.level_label, res.curve1.level_label};

    if (!opts.out_dir.empty()) {
        write_file_atomic(out_path(opts.out_dir, "curves.csv"),
                          curves_csv({res.curve0, res.curve1}));
        report["curve_file"] = "curves.csv";
        if (band_alpha > 0.0) {
            if (res.report.bootstrap_draws.empty())
                throw InvalidArgument("--band needs --bootstrap draws");
            const double q =
                bootstrap_quantile(res.report.bootstrap_draws, band_alpha);
            const KernelSpec kernel = KernelSpec::make(config.kernel);
            // d_n and the quantile scaling use the unit-range h; the grid
            // column stays in original units.
            CurveEstimate c0 = res.curve0, c1 = res.curve1;
            const Band band = confidence_band(c1, c0, res.h, kernel, band_alpha, q);
            std::string csv = "grid,diff,lower,upper\n";
            for (Eigen::Index g = 0; g < c0.grid.size(); ++g)
                csv += format_double(c0.grid(g)) + "," +
                       format_double(c1.ghat(g) - c0.ghat(g)) + "," +
                       format_double(band.lower(g)) + "," + format_double(band.upper(g)) + "\n";
            write_file_atomic(out_path(opts.out_dir, "band.csv"), csv);
            report["band_file"] = "band.csv";
            report["band_quantile"] = q;
        }
    }
    emit_report(report, opts.out_dir, "test_curves_report.json");
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed_override, int threads) {
    auto studies = parse_study_config(config_path);
    if (has_seed_override)
        for (auto& s : studies) s.seed = rng::derive_seed(seed_override, std::hash<std::string>{}(s.name));

    nlohmann::json summary;
    summary["config"] = config_path;
    summary["studies"] = nlohmann::json::array();
    const auto start = std::chrono::steady_clock::now();
    for (const auto& study : studies) {
        std::cerr << "running study " << study.name << " (" << study.kind << ")\n";
        summary["studies"].push_back(run_study(study, out_dir, threads));
    }
    const auto end = std::chrono::steady_clock::now();
    summary["wall_time_s"] = std::chrono::duration<double>(end - start).count();
    write_file_atomic(out_path(out_dir, "summary.json"), summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"partition-based estimation and inference for partially linear models"};
    app.require_subcommand(1);

    CommonFlags fit_flags;
    bool with_curve = false;
    int fit_grid = 100;
    std::string fit_kernel = "epanechnikov", fit_bandwidth = "gcv";
    CLI::App* fit_cmd = app.add_subcommand("fit", "profile least squares fit");
    add_common(fit_cmd, fit_flags);
    fit_cmd->add_flag("--curve", with_curve, "emit the smoothed curve per category level");
    fit_cmd->add_option("--grid", fit_grid, "curve grid points");
    fit_cmd->add_option("--kernel", fit_kernel, "epanechnikov|gaussian");
    fit_cmd->add_option("--bandwidth", fit_bandwidth, "gcv or a fixed value");

    CommonFlags tl_flags;
    std::string constrain, constrain_file;
    int tl_bootstrap = 0;
    CLI::App* tl_cmd = app.add_subcommand("test-linear", "linear-hypothesis test");
    add_common(tl_cmd, tl_flags);
    tl_cmd->add_option("--constrain", constrain, "constraints like \"x3=0,x4=0\"");
    tl_cmd->add_option("--constrain-file", constrain_file,
                       "whitespace-separated k x p constraint matrix");
    tl_cmd->add_option("--bootstrap", tl_bootstrap, "bootstrap replicates");

    CommonFlags tc_flags;
    int tc_bootstrap = 500, tc_grid = 100;
    std::string sided = "two", tc_kernel = "epanechnikov", tc_bandwidth = "gcv";
    double undersmooth = 0.8, band_alpha = 0.0;
    CLI::App* tc_cmd = app.add_subcommand("test-curves", "two-population curve test");
    add_common(tc_cmd, tc_flags);
    tc_cmd->add_option("--bootstrap", tc_bootstrap, "bootstrap replicates");
    tc_cmd->add_option("--sided", sided, "two|less|greater");
    tc_cmd->add_option("--kernel", tc_kernel, "epanechnikov|gaussian");
    tc_cmd->add_option("--bandwidth", tc_bandwidth,
                       "gcv or a fixed unit-range value (fixed values skip undersmoothing)");
    tc_cmd->add_option("--undersmooth", undersmooth, "bandwidth shrink factor for testing");
    tc_cmd->add_option("--band", band_alpha, "write a (1-alpha) simultaneous band CSV");
    tc_cmd->add_option("--grid", tc_grid, "evaluation grid points");

    std::string sim_config, sim_out = "plmcell_out";
    std::uint64_t sim_seed = 0;
    int sim_threads = 0;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "run study configurations");
    sim_cmd->add_option("--config", sim_config, "study configuration file")->required();
    sim_cmd->add_option("--out", sim_out, "output directory");
    CLI::Option* seed_opt = sim_cmd->add_option("--seed", sim_seed, "override every study seed");
    sim_cmd->add_option("--threads", sim_threads, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed())
            return cmd_fit(fit_flags, with_curve, fit_grid, fit_kernel, fit_bandwidth);
        if (tl_cmd->parsed()) {
            if (constrain.empty() && constrain_file.empty())
                throw plmcell::InvalidArgument("need --constrain or --constrain-file");
            return cmd_test_linear(tl_flags, constrain, constrain_file, tl_bootstrap);
        }
        if (tc_cmd->parsed())
            return cmd_test_curves(tc_flags, tc_bootstrap, sided, tc_kernel, tc_bandwidth,
                                   undersmooth, band_alpha, tc_grid);
        if (sim_cmd->parsed())
            return cmd_simulate(sim_config, sim_out, sim_seed, seed_opt->count() > 0,
                                sim_threads);
    } catch (const plmcell::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

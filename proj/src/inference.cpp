#include "plmcell/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

#include "plmcell/errors.hpp"
#include "plmcell/parallel.hpp"
#include "plmcell/rng.hpp"

namespace plmcell {

const char* sided_name(Sided s) {
    switch (s) {
        case Sided::two: return "two";
        case Sided::less: return "less";
        case Sided::greater: return "greater";
    }
    return "?";
}

Sided sided_from_name(const std::string& name) {
    if (name == "two") return Sided::two;
    if (name == "less") return Sided::less;
    if (name == "greater") return Sided::greater;
    throw InvalidArgument("unknown sidedness: " + name);
}

double chi2_upper_tail(double x, int df) {
    if (x <= 0.0) return 1.0;
    const boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::cdf(boost::math::complement(dist, x));
}

double chi2_quantile(double prob, int df) {
    const boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::quantile(dist, prob);
}

void LinearHypothesis::validate(Eigen::Index p) const {
    if (a.rows() == 0 || a.cols() != p)
        throw InvalidArgument("constraint matrix must be k x p with k >= 1");
    if (a.rows() > p)
        throw RankDeficientConstraint("more constraints than coefficients");
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(sv.size() - 1) < sv(0) * 1e-10)
        throw RankDeficientConstraint("constraint matrix does not have full row rank");
}

Eigen::MatrixXd LinearHypothesis::null_space_basis() const {
    const Eigen::Index p = a.cols();
    const Eigen::Index k = a.rows();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(p - k);
}

PlmFit restricted_fit(const Dataset& ds, const PartitionPlan& plan,
                      const LinearHypothesis& hyp) {
    ds.validate();
    hyp.validate(ds.p());
    const Eigen::MatrixXd basis = hyp.null_space_basis();
    const CenteredSolver solver(ds.x * basis, plan);
    const Eigen::VectorXd theta = solver.solve(ds.y);
    const Eigen::VectorXd beta0 = basis * theta;

    const Eigen::MatrixXd xc = center_within_cells(ds.x, plan);
    const Eigen::MatrixXd cov_unit =
        basis.cols() > 0
            ? Eigen::MatrixXd(basis * solver.gram_inverse() * basis.transpose())
            : Eigen::MatrixXd(Eigen::MatrixXd::Zero(ds.p(), ds.p()));
    return assemble_fit(ds, plan, beta0, xc.transpose() * xc, cov_unit);
}

double t1_statistic(double rss0, double rss1) {
    if (!(rss1 > 0.0)) throw InvalidArgument("unrestricted fit is exact (RSS1 = 0)");
    return (rss0 - rss1) / rss1;
}

TestReport t1_test(const Dataset& ds, const PartitionPlan& plan, const LinearHypothesis& hyp,
                   int n_bootstrap, std::uint64_t seed, int threads) {
    if (n_bootstrap < 0) throw InvalidArgument("negative bootstrap count");
    ds.validate();
    hyp.validate(ds.p());

    const CenteredSolver full(ds.x, plan);
    const Eigen::MatrixXd basis = hyp.null_space_basis();
    const CenteredSolver restricted(ds.x * basis, plan);

    const double rss1 = full.solve_with_rss(ds.y);
    const double rss0 = restricted.solve_with_rss(ds.y);
    const double observed = t1_statistic(rss0, rss1);

    const Eigen::Index n = ds.n();
    // (I-1)/I * n with I = n/J; reduces to the equal-cell formula exactly.
    const double scale = static_cast<double>(n - plan.n_cells());

    TestReport report;
    report.statistic = observed;
    report.scaled_statistic = scale * observed;
    report.df = static_cast<int>(hyp.k());
    report.p_asymptotic = chi2_upper_tail(report.scaled_statistic, report.df);
    report.sided = Sided::greater;
    report.seed = seed;
    report.n_bootstrap = n_bootstrap;
    if (n_bootstrap == 0) return report;

    // Null-fit pieces the resampling starts from.
    Eigen::VectorXd theta0;
    restricted.solve_with_rss(ds.y, &theta0);
    const Eigen::VectorXd beta0 = basis * theta0;
    PlmFit f0 = assemble_fit(ds, plan, beta0, full.gram(), Eigen::MatrixXd::Zero(ds.p(), ds.p()));
    const Eigen::VectorXd fitted0 = ds.y - f0.residuals;
    const Eigen::VectorXd& eps0 = f0.residuals;

    report.bootstrap_draws.assign(static_cast<std::size_t>(n_bootstrap), 0.0);
    parallel_for(static_cast<std::size_t>(n_bootstrap), threads, [&](std::size_t b) {
        rng::Stream stream(seed, b);
        Eigen::VectorXd eps(n);
        double mean = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            eps(i) = eps0(static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n))));
            mean += eps(i);
        }
        mean /= static_cast<double>(n);
        const Eigen::VectorXd ystar = fitted0 + (eps.array() - mean).matrix();
        const double r1 = full.solve_with_rss(ystar);
        const double r0 = restricted.solve_with_rss(ystar);
        report.bootstrap_draws[b] = t1_statistic(r0, r1);
    });

    int exceed = 0;
    for (const double d : report.bootstrap_draws)
        if (d >= observed) ++exceed;
    report.p_bootstrap = (1.0 + exceed) / (n_bootstrap + 1.0);
    return report;
}

double gumbel_centering(double h, const KernelSpec& kernel) {
    if (!(h > 0.0 && h < 1.0))
        throw InvalidArgument("bandwidth must lie in (0,1) for the sup-norm statistic");
    const double a = std::sqrt(-2.0 * std::log(h));
    const double c = std::log(kernel.int_kprime2 / (4.0 * 3.14159265358979323846 * kernel.int_k2));
    return a + c / a;
}

double t2_statistic(const CurveEstimate& curve1, const CurveEstimate& curve0, double h,
                    const KernelSpec& kernel, Sided sided) {
    if (curve1.grid.size() != curve0.grid.size() || curve1.grid.size() == 0)
        throw InvalidArgument("curves must share a non-empty grid");
    const double a = std::sqrt(-2.0 * std::log(h));
    const double dn = gumbel_centering(h, kernel);

    double sup = -std::numeric_limits<double>::infinity();
    for (Eigen::Index g = 0; g < curve1.grid.size(); ++g) {
        const double var = curve1.var_ghat(g) + curve0.var_ghat(g);
        if (!(var > 0.0))
            throw InvalidArgument("zero variance at grid point " +
                                  std::to_string(curve1.grid(g)));
        const double d = (curve1.ghat(g) - curve0.ghat(g)) / std::sqrt(var);
        double v = 0.0;
        switch (sided) {
            case Sided::two: v = std::abs(d); break;
            case Sided::greater: v = d; break;
            case Sided::less: v = -d; break;
        }
        sup = std::max(sup, v);
    }
    return a * (sup - dn);
}

Band confidence_band(const CurveEstimate& curve1, const CurveEstimate& curve0, double h,
                     const KernelSpec& kernel, double alpha, double q_boot) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    if (curve1.grid.size() != curve0.grid.size())
        throw InvalidArgument("curves must share a grid");
    const double a = std::sqrt(-2.0 * std::log(h));
    const double dn = gumbel_centering(h, kernel);
    const double mult = dn + q_boot / a;

    Band band;
    band.lower.resize(curve1.grid.size());
    band.upper.resize(curve1.grid.size());
    for (Eigen::Index g = 0; g < curve1.grid.size(); ++g) {
        const double diff = curve1.ghat(g) - curve0.ghat(g);
        const double half = mult * std::sqrt(curve1.var_ghat(g) + curve0.var_ghat(g));
        band.lower(g) = diff - half;
        band.upper(g) = diff + half;
    }
    return band;
}

double bootstrap_quantile(const std::vector<double>& draws, double alpha) {
    if (draws.empty()) throw InvalidArgument("no bootstrap draws");
    std::vector<double> s = draws;
    std::sort(s.begin(), s.end());
    const double rank = (1.0 - alpha) * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    return s[lo] + (rank - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

namespace {

struct CurvePair {
    CurveEstimate c0, c1;
};

// Curves for the two label groups over a shared grid and bandwidth.
CurvePair group_curves(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::vector<int>& labels, int degree, double h,
                       const KernelSpec& kernel, const Eigen::VectorXd& grid) {
    CurvePair out;
    for (int level = 0; level < 2; ++level) {
        Eigen::Index count = 0;
        for (const int l : labels)
            if (l == level) ++count;
        Eigen::VectorXd xs(count), ys(count);
        Eigen::Index at = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (labels[static_cast<std::size_t>(i)] == level) {
                xs(at) = x(i);
                ys(at) = y(i);
                ++at;
            }
        }
        CurveEstimate c = local_poly_fit(xs, ys, degree, h, kernel, grid);
        c.level = level;
        (level == 0 ? out.c0 : out.c1) = std::move(c);
    }
    return out;
}

}  // namespace

CurveTestResult t2_test(const Dataset& ds, const ZSpec& zspec, const PlmFit& fit_result,
                        const CurveTestConfig& config, int n_bootstrap, std::uint64_t seed,
                        Sided sided) {
    ds.validate();
    if (zspec.categorical.size() != 1)
        throw InvalidArgument("curve comparison needs exactly one categorical Z column");
    if (zspec.continuous.size() != 1)
        throw InvalidArgument("curve comparison needs exactly one continuous Z column");
    const int zd_col = ds.zd_index(zspec.categorical[0]);
    const int zc_col = ds.zc_index(zspec.continuous[0]);
    if (zd_col < 0 || zc_col < 0) throw InvalidArgument("unknown Z column");
    if (ds.zd_levels[static_cast<std::size_t>(zd_col)].size() != 2)
        throw InvalidArgument("categorical column " + zspec.categorical[0] + " is not binary");

    const Eigen::Index n = ds.n();
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::array<Eigen::Index, 2> sizes{0, 0};
    for (Eigen::Index i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = ds.z_categorical(i, zd_col);
        ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    constexpr Eigen::Index kMinGroup = 10;
    if (sizes[0] < kMinGroup || sizes[1] < kMinGroup)
        throw GroupTooSmall("group sizes " + std::to_string(sizes[0]) + "/" +
                            std::to_string(sizes[1]) + " too small for curve estimation");

    const Eigen::VectorXd y_star = residualize(ds, fit_result);

    // Map the continuous coordinate to [0,1] so the bandwidth entering d_n is
    // a fraction of the observed range (the statistic needs h < 1).
    const Eigen::VectorXd raw = ds.z_continuous.col(zc_col);
    const double xmin = raw.minCoeff();
    const double range = raw.maxCoeff() - xmin;
    if (!(range > 0.0)) throw InvalidArgument("continuous Z column is constant");
    const Eigen::VectorXd x = (raw.array() - xmin) / range;

    const KernelSpec kernel = KernelSpec::make(config.kernel);
    const Eigen::VectorXd grid =
        default_grid(x, config.grid_points, config.grid_lo_pct, config.grid_hi_pct);

    // The pooled data does not depend on the group labels, so the selected
    // bandwidth is the same in every bootstrap replicate; select it once.
    // The candidate floor is the smallest h whose window holds degree+1
    // points of either group at every grid point (interior: (degree+1) times
    // the group's largest gap; edges: reach of the grid bounds to the
    // (degree+1)-th group point), inflated so it survives undersmoothing and
    // zero-weight window edges.
    double h_sel;
    if (config.fixed_bandwidth) {
        h_sel = *config.fixed_bandwidth;
    } else {
        const double grid_lo = grid(0);
        const double grid_hi = grid(grid.size() - 1);
        const auto d = static_cast<std::size_t>(config.degree);
        double floor_h = 0.0;
        for (int level = 0; level < 2; ++level) {
            std::vector<double> vals;
            for (Eigen::Index i = 0; i < n; ++i)
                if (labels[static_cast<std::size_t>(i)] == level) vals.push_back(x(i));
            std::sort(vals.begin(), vals.end());
            double gap = 0.0;
            for (std::size_t i = 1; i < vals.size(); ++i)
                gap = std::max(gap, vals[i] - vals[i - 1]);
            floor_h = std::max(floor_h, static_cast<double>(d + 1) * gap);
            floor_h = std::max(floor_h, vals[d] - grid_lo);
            floor_h = std::max(floor_h, grid_hi - vals[vals.size() - 1 - d]);
        }
        floor_h *= 1.1 / (config.undersmooth > 0.0 ? config.undersmooth : 1.0);
        const double range_x = 1.0;  // x was mapped to [0,1]
        const std::vector<double> candidates =
            log_spaced_bandwidths(std::min(floor_h, range_x), range_x,
                                  config.bandwidth_candidates);
        h_sel = gcv_bandwidth(x, y_star, config.degree, kernel, candidates);
    }
    // A user-fixed bandwidth is taken as-is; GCV selections are undersmoothed.
    const double h = config.fixed_bandwidth ? h_sel : config.undersmooth * h_sel;
    if (!(h > 0.0 && h < 1.0))
        throw InvalidArgument("bandwidth " + std::to_string(h) + " outside (0,1)");

    const CurvePair observed =
        group_curves(x, y_star, labels, config.degree, h, kernel, grid);
    const double statistic = t2_statistic(observed.c1, observed.c0, h, kernel, sided);

    CurveTestResult result;
    result.h = h;
    result.h_gcv = h_sel;
    result.dn = gumbel_centering(h, kernel);
    result.group_sizes = sizes;
    result.report.statistic = statistic;
    result.report.scaled_statistic = statistic;
    result.report.df = 0;
    result.report.sided = sided;
    result.report.seed = seed;
    result.report.n_bootstrap = n_bootstrap;

    if (n_bootstrap > 0) {
        result.report.bootstrap_draws.assign(static_cast<std::size_t>(n_bootstrap), 0.0);
        parallel_for(static_cast<std::size_t>(n_bootstrap), config.threads, [&](std::size_t b) {
            rng::Stream stream(seed, b);
            std::vector<int> resampled(static_cast<std::size_t>(n));
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 1000)
                    throw GroupTooSmall("bootstrap resampling keeps producing degenerate "
                                        "groups");
                Eigen::Index ones = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const auto j = static_cast<std::size_t>(
                        stream.below(static_cast<std::uint64_t>(n)));
                    resampled[static_cast<std::size_t>(i)] = labels[j];
                    ones += labels[j];
                }
                if (ones < kMinGroup || n - ones < kMinGroup) continue;
                try {
                    const CurvePair pair =
                        group_curves(x, y_star, resampled, config.degree, h, kernel, grid);
                    result.report.bootstrap_draws[b] =
                        t2_statistic(pair.c1, pair.c0, h, kernel, sided);
                    break;
                } catch (const BandwidthTooSmall&) {
                    continue;  // resampled group too sparse near a grid point
                }
            }
        });
        int exceed = 0;
        for (const double d : result.report.bootstrap_draws)
            if (d >= statistic) ++exceed;
        result.report.p_bootstrap = (1.0 + exceed) / (n_bootstrap + 1.0);
    }

    // Curves reported in the original coordinate units.
    auto restore = [&](CurveEstimate c, int level) {
        c.grid = (c.grid.array() * range + xmin).matrix();
        c.bandwidth = h * range;
        c.level = level;
        c.level_label = ds.zd_levels[static_cast<std::size_t>(zd_col)][static_cast<std::size_t>(level)];
        return c;
    };
    result.curve0 = restore(observed.c0, 0);
    result.curve1 = restore(observed.c1, 1);
    return result;
}

}  // namespace plmcell

#include "plmcell/simulation.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "plmcell/errors.hpp"
#include "plmcell/parallel.hpp"
#include "plmcell/rng.hpp"
#include "plmcell/smoother.hpp"

namespace plmcell {

const char* example_name(Example e) {
    switch (e) {
        case Example::Ex1: return "ex1";
        case Example::Ex2: return "ex2";
        case Example::Ex3: return "ex3";
    }
    return "?";
}

Example example_from_name(const std::string& name) {
    if (name == "ex1") return Example::Ex1;
    if (name == "ex2") return Example::Ex2;
    if (name == "ex3") return Example::Ex3;
    throw InvalidArgument("unknown example: " + name);
}

void DgpSpec::validate() const {
    if (n < 20) throw InvalidArgument("need n >= 20");
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidArgument("rho must lie in (-1,1)");
    if (delta < 0.0) throw InvalidArgument("delta must be nonnegative");
}

Eigen::VectorXd true_beta(const DgpSpec& spec) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(6);
    switch (spec.example) {
        case Example::Ex1:
            beta(0) = 1.0;
            beta(1) = 3.0;
            beta(2) = spec.delta;
            break;
        case Example::Ex2:
            beta(0) = 1.5;
            beta(1) = 0.3;
            beta(2) = spec.delta;
            break;
        case Example::Ex3:
            beta(0) = 3.5;
            beta(1) = 1.3;
            break;
    }
    return beta;
}

ZSpec default_zspec(Example e) {
    ZSpec z;
    switch (e) {
        case Example::Ex1:
            z.continuous = {"z"};
            z.strategy = Strategy::SingleContinuous;
            break;
        case Example::Ex2:
            z.continuous = {"z1", "z2", "z3"};
            z.strategy = Strategy::OrderByComponent;
            z.order_column = "z1";
            break;
        case Example::Ex3:
            z.continuous = {"zc"};
            z.categorical = {"zd"};
            z.strategy = Strategy::CategoricalSplit;
            break;
    }
    return z;
}

LinearHypothesis default_hypothesis() {
    LinearHypothesis hyp;
    hyp.a = Eigen::MatrixXd::Zero(4, 6);
    for (int r = 0; r < 4; ++r) hyp.a(r, r + 2) = 1.0;
    return hyp;
}

namespace {

// Cholesky factor of the p x p equicorrelation matrix.
Eigen::MatrixXd equicorrelation_chol(int p, double rho) {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p, p, rho);
    sigma.diagonal().setOnes();
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw InvalidArgument("equicorrelation matrix is not positive definite for rho = " +
                              std::to_string(rho));
    return llt.matrixL();
}

std::vector<std::string> default_x_names(int p) {
    std::vector<std::string> names;
    for (int j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

}  // namespace

Dataset dgp_replicate(const DgpSpec& spec, std::uint64_t replicate) {
    spec.validate();
    const Eigen::Index n = spec.n;
    const int p = 6;
    const Eigen::VectorXd beta = true_beta(spec);
    rng::Stream stream(spec.seed, replicate);

    Dataset ds;
    ds.x.resize(n, p);
    ds.y.resize(n);
    ds.x_names = default_x_names(p);

    switch (spec.example) {
        case Example::Ex1: {
            // (X, Z) jointly normal, equicorrelated.
            const Eigen::MatrixXd chol = equicorrelation_chol(p + 1, spec.rho);
            ds.z_continuous.resize(n, 1);
            ds.zc_names = {"z"};
            Eigen::VectorXd w(p + 1);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int j = 0; j <= p; ++j) w(j) = stream.normal();
                const Eigen::VectorXd v = chol * w;
                ds.x.row(i) = v.head(p).transpose();
                const double z = v(p);
                ds.z_continuous(i, 0) = z;
                ds.y(i) = ds.x.row(i).dot(beta) + 3.0 * std::sin(2.0 * z) + stream.normal();
            }
            break;
        }
        case Example::Ex2: {
            const Eigen::MatrixXd chol = equicorrelation_chol(p, spec.rho);
            ds.z_continuous.resize(n, 3);
            ds.zc_names = {"z1", "z2", "z3"};
            const double root_n = std::sqrt(static_cast<double>(n));
            Eigen::VectorXd w(p);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int j = 0; j < p; ++j) w(j) = stream.normal();
                const Eigen::VectorXd v = chol * w;
                ds.x.row(i) = v.transpose();
                const double z1 = v(0) + stream.normal();
                const double z2 = z1 + stream.normal() / root_n;
                const double z3 = z1 + stream.normal() / root_n;
                ds.z_continuous(i, 0) = z1;
                ds.z_continuous(i, 1) = z2;
                ds.z_continuous(i, 2) = z3;
                const double g = -5.0 * std::sin(2.0 * z1) + z2 * z2 - 2.0 / 3.0 + z3;
                ds.y(i) = ds.x.row(i).dot(beta) + g + stream.normal();
            }
            break;
        }
        case Example::Ex3: {
            ds.z_continuous.resize(n, 1);
            ds.zc_names = {"zc"};
            ds.z_categorical.resize(n, 1);
            ds.zd_names = {"zd"};
            ds.zd_levels = {{"0", "1"}};
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int j = 0; j < p; ++j) ds.x(i, j) = stream.bernoulli(0.5) ? 1.0 : 0.0;
                const int zd = stream.bernoulli(0.7) ? 1 : 0;
                const double zc = stream.uniform(-1.0, 1.0);
                ds.z_categorical(i, 0) = zd;
                ds.z_continuous(i, 0) = zc;
                const double g = zc * zc + 2.0 * zc +
                                 spec.delta * zd * std::exp(-16.0 * zc * zc);
                ds.y(i) = ds.x.row(i).dot(beta) + g + 0.2 * stream.normal();
            }
            break;
        }
    }
    return ds;
}

namespace {

double column_quantile(const Eigen::VectorXd& v, double q) {
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const double rank = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    return s[lo] + (rank - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double sample_sd(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

McResult run_mc(const DgpSpec& spec, int cell_size, int replicates, int threads) {
    if (replicates < 1) throw InvalidArgument("need at least one replicate");
    const ZSpec zspec = default_zspec(spec.example);
    const Eigen::VectorXd beta0 = true_beta(spec);
    const int p = static_cast<int>(beta0.size());

    Eigen::MatrixXd betas(replicates, p);
    Eigen::MatrixXd ses(replicates, p);
    Eigen::VectorXd ase(replicates), mse(replicates);

    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        try {
            const Dataset ds = dgp_replicate(spec, r);
            const PartitionPlan plan = make_partition(ds, zspec, cell_size);
            const PlmFit f = fit(ds, plan);
            const auto row = static_cast<Eigen::Index>(r);
            betas.row(row) = f.beta.transpose();
            ses.row(row) = f.std_errors().transpose();
            ase(row) = (f.beta - beta0).lpNorm<1>();
            mse(row) = (f.beta - beta0).squaredNorm();
        } catch (const Error& e) {
            throw Error("replicate " + std::to_string(r) + ": " + e.what());
        }
    });

    McResult out;
    out.replicates = replicates;
    out.ase_mean = ase.mean();
    out.ase_sd = sample_sd(ase);
    out.mse_mean = mse.mean();
    out.per_coef_mean = betas.colwise().mean();
    out.per_coef_sd.resize(p);
    out.per_coef_rsd.resize(p);
    out.per_coef_sdm.resize(p);
    out.per_coef_sdmad.resize(p);
    for (int j = 0; j < p; ++j) {
        const Eigen::VectorXd bj = betas.col(j);
        out.per_coef_sd(j) = sample_sd(bj);
        out.per_coef_rsd(j) =
            (column_quantile(bj, 0.75) - column_quantile(bj, 0.25)) / 1.349;
        const Eigen::VectorXd sj = ses.col(j);
        const double med = column_quantile(sj, 0.5);
        out.per_coef_sdm(j) = med;
        out.per_coef_sdmad(j) =
            1.4826 * column_quantile((sj.array() - med).abs(), 0.5);
    }
    out.rsd = out.per_coef_rsd.mean();
    return out;
}

double ks_distance_chi2(const std::vector<double>& sorted_draws, int df) {
    if (sorted_draws.empty()) throw InvalidArgument("no draws");
    const boost::math::chi_squared dist(static_cast<double>(df));
    const double n = static_cast<double>(sorted_draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted_draws.size(); ++i) {
        const double f = boost::math::cdf(dist, std::max(sorted_draws[i], 0.0));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

NullStudyResult null_distribution_study(const DgpSpec& spec, int cell_size, int replicates,
                                        int threads) {
    // delta is the alternative coefficient shift for Ex1/Ex2; for Ex3 it
    // moves the curve only, so the coefficient null holds for any delta.
    if (spec.delta != 0.0 && spec.example != Example::Ex3)
        throw InvalidArgument("null-distribution study requires delta = 0");
    if (replicates < 1) throw InvalidArgument("need at least one replicate");
    const ZSpec zspec = default_zspec(spec.example);
    const LinearHypothesis hyp = default_hypothesis();

    NullStudyResult out;
    out.df = static_cast<int>(hyp.k());
    out.scaled_stats.assign(static_cast<std::size_t>(replicates), 0.0);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        const Dataset ds = dgp_replicate(spec, r);
        const PartitionPlan plan = make_partition(ds, zspec, cell_size);
        const TestReport report = t1_test(ds, plan, hyp, 0, 0, 1);
        out.scaled_stats[r] = report.scaled_statistic;
    });
    std::sort(out.scaled_stats.begin(), out.scaled_stats.end());
    out.ks_distance = ks_distance_chi2(out.scaled_stats, out.df);

    const double crit = chi2_quantile(0.95, out.df);
    int rejections = 0;
    for (const double s : out.scaled_stats)
        if (s > crit) ++rejections;
    out.rejection_at_5pct = static_cast<double>(rejections) / static_cast<double>(replicates);
    return out;
}

std::vector<PowerPoint> power_curve(const DgpSpec& base, TestKind kind,
                                    const std::vector<double>& deltas, int cell_size,
                                    int replicates, int n_bootstrap, double level,
                                    int threads) {
    if (deltas.empty()) throw InvalidArgument("empty delta grid");
    if (replicates < 1) throw InvalidArgument("need at least one replicate");
    const ZSpec zspec = default_zspec(base.example);
    const LinearHypothesis hyp = default_hypothesis();

    std::vector<PowerPoint> out;
    for (std::size_t d = 0; d < deltas.size(); ++d) {
        DgpSpec spec = base;
        spec.delta = deltas[d];
        spec.seed = rng::derive_seed(base.seed, d);

        std::vector<int> reject_asym(static_cast<std::size_t>(replicates), 0);
        std::vector<int> reject_boot(static_cast<std::size_t>(replicates), 0);
        parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
            const Dataset ds = dgp_replicate(spec, r);
            const PartitionPlan plan = make_partition(ds, zspec, cell_size);
            const std::uint64_t boot_seed =
                rng::derive_seed(spec.seed, 0x8000000000000000ull | r);
            if (kind == TestKind::LinearT1) {
                const TestReport rep = t1_test(ds, plan, hyp, n_bootstrap, boot_seed, 1);
                reject_asym[r] = *rep.p_asymptotic <= level ? 1 : 0;
                if (rep.p_bootstrap) reject_boot[r] = *rep.p_bootstrap <= level ? 1 : 0;
            } else {
                const PlmFit f = fit(ds, plan);
                CurveTestConfig config;
                config.threads = 1;
                const CurveTestResult res =
                    t2_test(ds, zspec, f, config, n_bootstrap, boot_seed, Sided::two);
                if (res.report.p_bootstrap)
                    reject_boot[r] = *res.report.p_bootstrap <= level ? 1 : 0;
            }
        });

        PowerPoint point;
        point.delta = deltas[d];
        const double nr = static_cast<double>(replicates);
        point.rate_bootstrap =
            static_cast<double>(std::accumulate(reject_boot.begin(), reject_boot.end(), 0)) / nr;
        point.rate_asymptotic =
            kind == TestKind::LinearT1
                ? static_cast<double>(
                      std::accumulate(reject_asym.begin(), reject_asym.end(), 0)) /
                      nr
                : std::numeric_limits<double>::quiet_NaN();
        out.push_back(point);
    }
    return out;
}

double mse_rate_slope(const std::vector<Eigen::Index>& ns, const std::vector<int>& cell_sizes,
                      const std::vector<std::vector<double>>& mse_by_n_then_i) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double count = 0.0;
    for (std::size_t a = 0; a < ns.size(); ++a) {
        for (std::size_t b = 0; b < cell_sizes.size(); ++b) {
            const double i_sz = static_cast<double>(cell_sizes[b]);
            const double x = std::log(static_cast<double>(ns[a]));
            const double y =
                std::log(mse_by_n_then_i[a][b]) - std::log(i_sz / (i_sz - 1.0));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1.0;
        }
    }
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace plmcell

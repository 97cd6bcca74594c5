#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plmcell/dataset.hpp"
#include "plmcell/estimator.hpp"
#include "plmcell/partition.hpp"
#include "plmcell/smoother.hpp"

namespace plmcell {

enum class Sided { two, less, greater };

const char* sided_name(Sided s);
Sided sided_from_name(const std::string& name);

// Linear constraint A*beta = 0 with A of full row rank k <= p.
struct LinearHypothesis {
    Eigen::MatrixXd a;

    Eigen::Index k() const { return a.rows(); }
    // Throws RankDeficientConstraint / InvalidArgument.
    void validate(Eigen::Index p) const;
    // Orthonormal basis of ker(A), p x (p-k).
    Eigen::MatrixXd null_space_basis() const;
};

struct TestReport {
    double statistic = 0.0;         // raw T
    double scaled_statistic = 0.0;  // (I-1)/I * n * T for the linear test; T itself otherwise
    int df = 0;                     // k for the linear test, 0 otherwise
    std::optional<double> p_asymptotic;
    std::optional<double> p_bootstrap;
    int n_bootstrap = 0;
    std::vector<double> bootstrap_draws;
    Sided sided = Sided::greater;
    std::uint64_t seed = 0;
};

// Profile least squares under A*beta = 0 (fit on a basis of ker A).
PlmFit restricted_fit(const Dataset& ds, const PartitionPlan& plan, const LinearHypothesis& hyp);

// (rss0 - rss1) / rss1; throws on rss1 <= 0.
double t1_statistic(double rss0, double rss1);

// Linear-hypothesis test: scaled statistic (n-J)*T compared against chi^2_k,
// plus a residual bootstrap under the null.  Bootstrap replicate b draws from
// stream (seed, b), so the report is identical for any thread count.
TestReport t1_test(const Dataset& ds, const PartitionPlan& plan, const LinearHypothesis& hyp,
                   int n_bootstrap, std::uint64_t seed, int threads = 0);

// Gumbel-type centering d_n = a + log(int K'^2 / (4 pi int K^2)) / a with
// a = sqrt(-2 log h); requires 0 < h < 1.
double gumbel_centering(double h, const KernelSpec& kernel);

// Sup-norm statistic for the difference of two curves sharing a grid:
//   sqrt(-2 log h) * (sup_sided (g1-g0)/sqrt(var1+var0) - d_n).
double t2_statistic(const CurveEstimate& curve1, const CurveEstimate& curve0, double h,
                    const KernelSpec& kernel, Sided sided);

struct CurveTestConfig {
    KernelFamily kernel = KernelFamily::Epanechnikov;
    int degree = 2;
    int grid_points = 100;
    double grid_lo_pct = 2.0;
    double grid_hi_pct = 98.0;
    double undersmooth = 0.8;                // applied to the GCV bandwidth
    std::optional<double> fixed_bandwidth;   // on the unit-range scale; skips GCV
    int bandwidth_candidates = 20;
    int threads = 0;
};

struct CurveTestResult {
    TestReport report;
    CurveEstimate curve0;  // grid in original coordinate units
    CurveEstimate curve1;
    double h = 0.0;      // bandwidth entering d_n, on the unit-range scale
    double h_gcv = 0.0;  // selected bandwidth before undersmoothing
    double dn = 0.0;
    std::array<Eigen::Index, 2> group_sizes{0, 0};
};

// Two-population curve test on y - x*beta_hat, split by the single binary
// categorical Z column.  The continuous coordinate is mapped to [0,1] so the
// bandwidth entering d_n is a fraction of the observed range.  The bootstrap
// resamples category labels with replacement and recomputes the statistic;
// replicate b draws from stream (seed, b).
CurveTestResult t2_test(const Dataset& ds, const ZSpec& zspec, const PlmFit& fit_result,
                        const CurveTestConfig& config, int n_bootstrap, std::uint64_t seed,
                        Sided sided);

struct Band {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

// Simultaneous band for g1 - g0: (g1-g0) -+ {d_n + q/sqrt(-2 log h)} *
// sqrt(var1+var0), with q the (1-alpha) bootstrap quantile.
Band confidence_band(const CurveEstimate& curve1, const CurveEstimate& curve0, double h,
                     const KernelSpec& kernel, double alpha, double q_boot);

// Empirical (1-alpha) quantile of the draws (linear interpolation).
double bootstrap_quantile(const std::vector<double>& draws, double alpha);

double chi2_upper_tail(double x, int df);
double chi2_quantile(double prob, int df);

}  // namespace plmcell

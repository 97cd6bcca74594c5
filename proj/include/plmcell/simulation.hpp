#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "plmcell/dataset.hpp"
#include "plmcell/inference.hpp"

namespace plmcell {

// The three simulation designs:
//   Ex1: six-dimensional X jointly normal with a single continuous Z
//        (equicorrelation rho), g(z) = 3 sin(2z), eps ~ N(0,1).
//   Ex2: X equicorrelated normal; Z1 = X1 + N(0,1), Z2/Z3 = Z1 + n^{-1/2} u;
//        g = -5 sin(2 z1) + z2^2 - 2/3 + z3, eps ~ N(0,1).
//   Ex3: X iid Bernoulli(0.5); binary Zd with P(1)=0.7, Zc uniform on [-1,1];
//        g = zc^2 + 2 zc + delta * zd * exp(-16 zc^2), eps ~ N(0, 0.2^2).
enum class Example { Ex1, Ex2, Ex3 };

const char* example_name(Example e);
Example example_from_name(const std::string& name);

struct DgpSpec {
    Example example = Example::Ex1;
    Eigen::Index n = 100;
    double rho = 0.5;    // X correlation, Ex1/Ex2
    double delta = 0.0;  // Ex1/Ex2: beta_3 under the alternative; Ex3: bump height
    std::uint64_t seed = 0;

    void validate() const;  // n >= 20, rho in (-1,1), delta >= 0
};

// True coefficient vector of the generated model: delta enters slot 3 for
// Ex1/Ex2 (the alternative shift); for Ex3 delta lives in the curve instead.
Eigen::VectorXd true_beta(const DgpSpec& spec);

// Partition specification matching each design.
ZSpec default_zspec(Example e);

// H0: last four of six coefficients vanish (k = 4).
LinearHypothesis default_hypothesis();

// Draws a dataset from stream (spec.seed, replicate); replicate r is the same
// whether generated alone or within a batch.
Dataset dgp_replicate(const DgpSpec& spec, std::uint64_t replicate);
inline Dataset dgp(const DgpSpec& spec) { return dgp_replicate(spec, 0); }

struct McResult {
    int replicates = 0;
    double ase_mean = 0.0;  // mean over replicates of sum_l |beta_l - beta0_l|
    double ase_sd = 0.0;
    double mse_mean = 0.0;  // mean of sum_l (beta_l - beta0_l)^2
    double rsd = 0.0;       // mean over coefficients of (Q3-Q1)/1.349
    Eigen::VectorXd per_coef_mean;
    Eigen::VectorXd per_coef_sd;     // empirical SD across replicates
    Eigen::VectorXd per_coef_rsd;    // (Q3-Q1)/1.349 across replicates
    Eigen::VectorXd per_coef_sdm;    // median of sandwich standard errors
    Eigen::VectorXd per_coef_sdmad;  // 1.4826 * MAD of sandwich standard errors
    std::optional<double> rejection_rate;
};

McResult run_mc(const DgpSpec& spec, int cell_size, int replicates, int threads = 0);

struct NullStudyResult {
    std::vector<double> scaled_stats;  // sorted ascending
    double ks_distance = 0.0;          // to chi^2_df
    int df = 4;
    double rejection_at_5pct = 0.0;  // by the asymptotic 5% critical value
};

// Distribution of the scaled linear-test statistic under the embedded null
// (delta must be 0).
NullStudyResult null_distribution_study(const DgpSpec& spec, int cell_size, int replicates,
                                        int threads = 0);

struct PowerPoint {
    double delta = 0.0;
    double rate_asymptotic = 0.0;  // NaN for the curve test
    double rate_bootstrap = 0.0;
};

enum class TestKind { LinearT1, CurveT2 };

// Rejection rates over a delta grid at the given level.  Each (delta,
// replicate) pair owns derived seeds, so results are reproducible and
// independent of the thread count.
std::vector<PowerPoint> power_curve(const DgpSpec& base, TestKind kind,
                                    const std::vector<double>& deltas, int cell_size,
                                    int replicates, int n_bootstrap, double level,
                                    int threads = 0);

// Least squares slope of log(MSE) - log(I/(I-1)) on log n; the rate study.
double mse_rate_slope(const std::vector<Eigen::Index>& ns, const std::vector<int>& cell_sizes,
                      const std::vector<std::vector<double>>& mse_by_n_then_i);

// Kolmogorov-Smirnov distance between sorted draws and the chi^2_df CDF.
double ks_distance_chi2(const std::vector<double>& sorted_draws, int df);

}  // namespace plmcell

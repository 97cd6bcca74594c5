#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace plmcell {

enum class KernelFamily { Epanechnikov, Gaussian };

const char* kernel_name(KernelFamily f);
KernelFamily kernel_from_name(const std::string& name);

// Analytic (int K^2, int K'^2) for the family.
std::pair<double, double> kernel_constants(KernelFamily family);

struct KernelSpec {
    KernelFamily family = KernelFamily::Epanechnikov;
    double int_k2 = 0.6;
    double int_kprime2 = 1.5;

    static KernelSpec make(KernelFamily f);

    double operator()(double t) const {
        if (family == KernelFamily::Epanechnikov)
            return std::abs(t) < 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
        return 0.3989422804014327 * std::exp(-0.5 * t * t);
    }
    // Weights are treated as zero beyond this |t|.
    double support() const { return family == KernelFamily::Epanechnikov ? 1.0 : 8.6; }
};

struct CurveEstimate {
    Eigen::VectorXd grid;      // ascending evaluation points
    Eigen::VectorXd ghat;      // estimate on the grid
    Eigen::VectorXd var_ghat;  // pointwise variance estimate
    double bandwidth = 0.0;
    int degree = 2;
    int level = -1;  // category code, -1 when not conditioned on a level
    std::string level_label;
};

// Local polynomial regression of y on x evaluated on the grid.  At each grid
// point u the estimate is the intercept of the weighted fit of y on powers of
// (x-u)/h with weights K((x-u)/h); the variance is the local residual variance
// times the squared norm of the equivalent-kernel weights.
// Throws BandwidthTooSmall when the local design is singular at some point.
CurveEstimate local_poly_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int degree,
                             double h, const KernelSpec& kernel, const Eigen::VectorXd& grid);

// Smallest generalized cross-validation score n*RSS(h)/(n - tr S)^2 over the
// candidates; ties go to the larger bandwidth.  Candidates whose local fits
// are singular are skipped; throws if all of them are.
double gcv_bandwidth(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int degree,
                     const KernelSpec& kernel, const std::vector<double>& candidates);

// log-spaced candidates from 2*(max adjacent gap) to the range of x.
std::vector<double> default_bandwidth_grid(const Eigen::VectorXd& x, int count = 20);

std::vector<double> log_spaced_bandwidths(double lo, double hi, int count);

// Largest gap between adjacent sorted values.
double max_adjacent_gap(const Eigen::VectorXd& x);

// Equispaced points between two percentiles of x (defaults 2..98).
Eigen::VectorXd default_grid(const Eigen::VectorXd& x, int points = 100, double lo_pct = 2.0,
                             double hi_pct = 98.0);

// Linear-interpolation percentile (0..100) of unsorted data.
double percentile(const Eigen::VectorXd& x, double pct);

}  // namespace plmcell

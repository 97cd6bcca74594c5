#include "plmcell/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plmcell/errors.hpp"

namespace plmcell {

const char* kernel_name(KernelFamily f) {
    return f == KernelFamily::Epanechnikov ? "epanechnikov" : "gaussian";
}

KernelFamily kernel_from_name(const std::string& name) {
    if (name == "epanechnikov") return KernelFamily::Epanechnikov;
    if (name == "gaussian") return KernelFamily::Gaussian;
    throw InvalidArgument("unknown kernel: " + name);
}

std::pair<double, double> kernel_constants(KernelFamily family) {
    if (family == KernelFamily::Epanechnikov) return {0.6, 1.5};
    // int phi^2 = 1/(2 sqrt(pi)); int phi'^2 = 1/(4 sqrt(pi))
    const double s = std::sqrt(3.14159265358979323846);
    return {1.0 / (2.0 * s), 1.0 / (4.0 * s)};
}

KernelSpec KernelSpec::make(KernelFamily f) {
    const auto [k2, kp2] = kernel_constants(f);
    return KernelSpec{f, k2, kp2};
}

double percentile(const Eigen::VectorXd& x, double pct) {
    if (x.size() == 0) throw InvalidArgument("percentile of empty vector");
    std::vector<double> s(x.data(), x.data() + x.size());
    std::sort(s.begin(), s.end());
    const double rank = pct / 100.0 * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

Eigen::VectorXd default_grid(const Eigen::VectorXd& x, int points, double lo_pct, double hi_pct) {
    if (points < 1) throw InvalidArgument("grid needs at least one point");
    const double lo = percentile(x, lo_pct);
    const double hi = percentile(x, hi_pct);
    Eigen::VectorXd grid(points);
    if (points == 1 || hi <= lo) {
        grid.setConstant(lo);
        grid.conservativeResize(1);
        return grid;
    }
    for (int i = 0; i < points; ++i)
        grid(i) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

double max_adjacent_gap(const Eigen::VectorXd& x) {
    if (x.size() < 2) throw InvalidArgument("need at least two observations");
    std::vector<double> s(x.data(), x.data() + x.size());
    std::sort(s.begin(), s.end());
    double max_gap = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) max_gap = std::max(max_gap, s[i] - s[i - 1]);
    return max_gap;
}

std::vector<double> log_spaced_bandwidths(double lo, double hi, int count) {
    if (!(hi > 0.0)) throw InvalidArgument("bandwidth range must be positive");
    if (!(lo > 0.0)) lo = hi * 1e-3;
    if (lo >= hi || count <= 1) return {hi};
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double ratio = hi / lo;
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] =
            lo * std::pow(ratio, static_cast<double>(i) / static_cast<double>(count - 1));
    return grid;
}

std::vector<double> default_bandwidth_grid(const Eigen::VectorXd& x, int count) {
    if (x.size() < 2) throw InvalidArgument("bandwidth grid needs at least two observations");
    const double range = x.maxCoeff() - x.minCoeff();
    if (!(range > 0.0)) throw InvalidArgument("all observations equal; no bandwidth scale");
    // Twice the largest gap guarantees a populated window between neighbors.
    return log_spaced_bandwidths(2.0 * max_adjacent_gap(x), range, count);
}

namespace {

constexpr int kMaxBasis = 16;  // polynomial degree up to 15

// Local weighted-polynomial solves against one sorted sample.  All evaluation
// points are independent; nothing here mutates, so grid points can be
// computed concurrently with bit-identical results.
class LocalPolyData {
public:
    LocalPolyData(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int degree,
                  const KernelSpec& kernel)
        : degree_(degree), q_(degree + 1), kernel_(kernel) {
        if (x.size() != y.size()) throw InvalidArgument("x and y lengths differ");
        if (x.size() == 0) throw InvalidArgument("empty sample");
        if (degree < 0 || degree >= kMaxBasis)
            throw InvalidArgument("unsupported polynomial degree " + std::to_string(degree));
        std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
        xs_.resize(x.size());
        ys_.resize(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            xs_(i) = x(order[static_cast<std::size_t>(i)]);
            ys_(i) = y(order[static_cast<std::size_t>(i)]);
        }
        span_ = xs_(xs_.size() - 1) - xs_(0);
        if (!(span_ > 0.0)) span_ = 1.0;
    }

    Eigen::Index n() const { return xs_.size(); }

    // Weighted fit centered at u; on success fills the estimate, the squared
    // norm factor of the equivalent-kernel weights, and the smoother-diagonal
    // contribution K(0) * a_0.
    bool at(double h, double u, double* value, double* var_factor, double* diag) const {
        const double halfwidth = kernel_.support() * h;
        const double* begin = xs_.data();
        const double* end = xs_.data() + xs_.size();
        const auto lo =
            static_cast<Eigen::Index>(std::lower_bound(begin, end, u - halfwidth) - begin);
        const auto hi =
            static_cast<Eigen::Index>(std::upper_bound(begin, end, u + halfwidth) - begin);
        if (hi - lo < q_) return false;

        // Polynomial basis scaled by min(h, data span) so the moment matrix
        // stays well conditioned for very large bandwidths; the intercept,
        // its variance factor, and the smoother diagonal are scale-invariant.
        const double c = std::min(h, span_);
        double s[2 * kMaxBasis - 1] = {0};
        double s2[2 * kMaxBasis - 1] = {0};
        double t[kMaxBasis] = {0};
        const int top = 2 * degree_;
        for (Eigen::Index i = lo; i < hi; ++i) {
            const double w = kernel_((xs_(i) - u) / h);
            if (w <= 0.0) continue;
            const double tau = (xs_(i) - u) / c;
            const double w2 = w * w;
            double pw = w, pw2 = w2;
            for (int m = 0; m <= top; ++m) {
                s[m] += pw;
                s2[m] += pw2;
                if (m <= degree_) t[m] += pw * ys_(i);
                pw *= tau;
                pw2 *= tau;
            }
        }

        double a[kMaxBasis];
        if (!solve_first_column(s, a)) return false;

        double val = 0.0;
        for (int m = 0; m < q_; ++m) val += a[m] * t[m];
        *value = val;
        if (var_factor) {
            double vf = 0.0;
            for (int r = 0; r < q_; ++r)
                for (int c = 0; c < q_; ++c) vf += a[r] * s2[r + c] * a[c];
            *var_factor = std::max(vf, 0.0);
        }
        if (diag) *diag = kernel_(0.0) * a[0];
        return true;
    }

    // Fit at every data point: residual sum of squares and smoother trace.
    bool in_sample(double h, double* rss, double* trace, double* bad_point = nullptr) const {
        double r = 0.0, tr = 0.0;
        for (Eigen::Index i = 0; i < n(); ++i) {
            double value = 0.0, diag = 0.0;
            if (!at(h, xs_(i), &value, nullptr, &diag)) {
                if (bad_point) *bad_point = xs_(i);
                return false;
            }
            const double e = ys_(i) - value;
            r += e * e;
            tr += diag;
        }
        *rss = r;
        *trace = tr;
        return true;
    }

private:
    // a = A^{-1} e_1 for the moment matrix A[r][c] = s[r+c], via Cholesky.
    bool solve_first_column(const double* s, double* a) const {
        double l[kMaxBasis][kMaxBasis];
        double max_diag = 0.0;
        for (int j = 0; j < q_; ++j) max_diag = std::max(max_diag, s[2 * j]);
        const double tol = max_diag * 1e-13;
        for (int j = 0; j < q_; ++j) {
            double d = s[2 * j];
            for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
            if (!(d > tol)) return false;
            l[j][j] = std::sqrt(d);
            for (int i = j + 1; i < q_; ++i) {
                double v = s[i + j];
                for (int k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
                l[i][j] = v / l[j][j];
            }
        }
        // Forward then backward substitution on e_1.
        double w[kMaxBasis];
        for (int i = 0; i < q_; ++i) {
            double v = (i == 0) ? 1.0 : 0.0;
            for (int k = 0; k < i; ++k) v -= l[i][k] * w[k];
            w[i] = v / l[i][i];
        }
        for (int i = q_ - 1; i >= 0; --i) {
            double v = w[i];
            for (int k = i + 1; k < q_; ++k) v -= l[k][i] * a[k];
            a[i] = v / l[i][i];
        }
        return true;
    }

    int degree_;
    int q_;
    KernelSpec kernel_;
    Eigen::VectorXd xs_, ys_;
    double span_ = 1.0;
};

}  // namespace

CurveEstimate local_poly_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int degree,
                             double h, const KernelSpec& kernel, const Eigen::VectorXd& grid) {
    if (!(h > 0.0)) throw InvalidArgument("bandwidth must be positive");
    const LocalPolyData data(x, y, degree, kernel);

    // Global residual variance from the in-sample local fit.
    double rss = 0.0, trace = 0.0, bad = 0.0;
    if (!data.in_sample(h, &rss, &trace, &bad))
        throw BandwidthTooSmall("singular local design at x = " + std::to_string(bad), bad);
    const double denom = std::max(static_cast<double>(data.n()) - trace, 1.0);
    const double sigma2_local = rss / denom;

    CurveEstimate curve;
    curve.grid = grid;
    curve.ghat.resize(grid.size());
    curve.var_ghat.resize(grid.size());
    curve.bandwidth = h;
    curve.degree = degree;
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        double value = 0.0, var_factor = 0.0;
        if (!data.at(h, grid(g), &value, &var_factor, nullptr))
            throw BandwidthTooSmall(
                "singular local design at grid point " + std::to_string(grid(g)), grid(g));
        curve.ghat(g) = value;
        curve.var_ghat(g) = sigma2_local * var_factor;
    }
    return curve;
}

double gcv_bandwidth(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int degree,
                     const KernelSpec& kernel, const std::vector<double>& candidates) {
    if (candidates.empty()) throw InvalidArgument("empty bandwidth candidate grid");
    const LocalPolyData data(x, y, degree, kernel);
    const double n = static_cast<double>(data.n());

    double best_h = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    bool any = false;
    std::vector<double> sorted = candidates;
    std::sort(sorted.begin(), sorted.end());
    for (const double h : sorted) {
        if (!(h > 0.0)) continue;
        double rss = 0.0, trace = 0.0;
        if (!data.in_sample(h, &rss, &trace)) continue;
        const double dof = n - trace;
        if (!(dof > 0.0)) continue;
        const double score = n * rss / (dof * dof);
        if (!std::isfinite(score)) continue;
        if (score <= best_score) {  // ties go to the larger bandwidth
            best_score = score;
            best_h = h;
            any = true;
        }
    }
    if (!any)
        throw BandwidthTooSmall("every candidate bandwidth gives a singular local fit",
                                std::numeric_limits<double>::quiet_NaN());
    return best_h;
}

}  // namespace plmcell

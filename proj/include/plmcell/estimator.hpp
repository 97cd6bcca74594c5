#pragma once

#include <Eigen/Dense>

#include "plmcell/dataset.hpp"
#include "plmcell/partition.hpp"

namespace plmcell {

// Profile least squares fit of Y = X*beta + alpha_cell + eps.
struct PlmFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha;  // one mean per cell
    double sigma2 = 0.0;
    Eigen::MatrixXd cov_beta;   // sigma2 * Gram^{-1}
    Eigen::VectorXd residuals;  // y - x*beta - alpha[cell]
    Eigen::MatrixXd gram;       // centered X' centered X
    PartitionPlan plan;
    double rss = 0.0;

    // Residual degrees of freedom: sum over cells of (size - 1) = n - J.
    Eigen::Index dof() const { return plan.n() - plan.n_cells(); }
    Eigen::VectorXd std_errors() const { return cov_beta.diagonal().cwiseSqrt(); }
};

// Subtracts per-cell column means; output cell blocks have exactly zero mean.
Eigen::MatrixXd center_within_cells(const Eigen::MatrixXd& m, const PartitionPlan& plan);
Eigen::VectorXd center_within_cells(const Eigen::VectorXd& v, const PartitionPlan& plan);

// sigma^2 = rss / (n - n_cells); throws when n <= n_cells.
double sigma2_hat(double rss, Eigen::Index n, Eigen::Index n_cells);

// sigma2 * gram^{-1} via eigendecomposition; throws SingularGram.
Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& gram, double sigma2);

// Least squares on a within-cell-centered design, reusable across responses.
// The decomposition is done once; solve() per response is O(n*q).  Used by the
// bootstrap, which refits thousands of responses against one design.
class CenteredSolver {
public:
    CenteredSolver(const Eigen::MatrixXd& design, const PartitionPlan& plan);

    // Coefficients of the centered regression of y on the design.
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
    // Coefficients plus the residual sum of squares of the centered fit
    // (identical to the full fit's RSS).
    double solve_with_rss(const Eigen::VectorXd& y, Eigen::VectorXd* coef = nullptr) const;

    const Eigen::MatrixXd& gram() const { return gram_; }
    Eigen::Index cols() const { return gram_.cols(); }
    // Gram^{-1}, from the cached SVD.
    Eigen::MatrixXd gram_inverse() const;

private:
    const PartitionPlan* plan_;
    Eigen::MatrixXd centered_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd u_;   // thin U of the centered design
    Eigen::MatrixXd v_;
    Eigen::VectorXd sv_;  // singular values of the centered design
};

PlmFit fit(const Dataset& ds, const PartitionPlan& plan);

// Fit for a given beta: cell means of y - x*beta, residuals, rss, sigma2.
// Covariance is filled from cov; used by fit and restricted_fit.
PlmFit assemble_fit(const Dataset& ds, const PartitionPlan& plan, const Eigen::VectorXd& beta,
                    const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cov_unit);

// y - x*beta; the cell means are left in (they are re-estimated by the smoother).
Eigen::VectorXd residualize(const Dataset& ds, const PlmFit& f);

}  // namespace plmcell

#include "plmcell/estimator.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "plmcell/errors.hpp"

namespace plmcell {

namespace {

// Relative threshold on the Gram matrix's singular values.
constexpr double kGramSingularRatio = 1e-10;

void check_plan_covers(const PartitionPlan& plan, Eigen::Index rows) {
    if (plan.n() != rows)
        throw InvalidArgument("partition plan covers " + std::to_string(plan.n()) +
                              " rows, data has " + std::to_string(rows));
}

}  // namespace

Eigen::MatrixXd center_within_cells(const Eigen::MatrixXd& m, const PartitionPlan& plan) {
    check_plan_covers(plan, m.rows());
    Eigen::MatrixXd out = m;
    for (const auto& cell : plan.cells) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m.cols());
        for (const Eigen::Index row : cell) mean += m.row(row);
        mean /= static_cast<double>(cell.size());
        for (const Eigen::Index row : cell) out.row(row) -= mean;
    }
    return out;
}

Eigen::VectorXd center_within_cells(const Eigen::VectorXd& v, const PartitionPlan& plan) {
    check_plan_covers(plan, v.size());
    Eigen::VectorXd out = v;
    for (const auto& cell : plan.cells) {
        double mean = 0.0;
        for (const Eigen::Index row : cell) mean += v(row);
        mean /= static_cast<double>(cell.size());
        for (const Eigen::Index row : cell) out(row) -= mean;
    }
    return out;
}

double sigma2_hat(double rss, Eigen::Index n, Eigen::Index n_cells) {
    if (n <= n_cells)
        throw InvalidArgument("no residual degrees of freedom: n = " + std::to_string(n) +
                              ", cells = " + std::to_string(n_cells));
    return rss / static_cast<double>(n - n_cells);
}

Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& gram, double sigma2) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw SingularGram("Gram eigendecomposition failed", 0.0);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double largest = ev(ev.size() - 1);
    const double smallest = ev(0);
    if (!(largest > 0.0) || smallest < largest * kGramSingularRatio)
        throw SingularGram("centered Gram matrix is singular (smallest singular value " +
                               std::to_string(smallest) + ")",
                           smallest);
    return sigma2 * eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
           eig.eigenvectors().transpose();
}

CenteredSolver::CenteredSolver(const Eigen::MatrixXd& design, const PartitionPlan& plan)
    : plan_(&plan) {
    check_plan_covers(plan, design.rows());
    const Eigen::Index q = design.cols();
    if (q == 0) {
        gram_.resize(0, 0);
        return;
    }
    centered_ = center_within_cells(design, plan);
    gram_ = centered_.transpose() * centered_;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sv_ = svd.singularValues();
    const double smax = sv_(0);
    const double smin = sv_(q - 1);
    // Threshold stated on the Gram matrix, whose singular values are sv^2.
    if (!(smax > 0.0) || (smin * smin) < (smax * smax) * kGramSingularRatio)
        throw SingularGram(
            "centered Gram matrix is singular (smallest singular value " +
                std::to_string(smin * smin) +
                "); no within-cell variation left in the design, or too many covariates",
            smin * smin);
    u_ = svd.matrixU();
    v_ = svd.matrixV();
}

Eigen::VectorXd CenteredSolver::solve(const Eigen::VectorXd& y) const {
    if (cols() == 0) return Eigen::VectorXd(0);
    const Eigen::VectorXd yc = center_within_cells(y, *plan_);
    return v_ * (sv_.cwiseInverse().asDiagonal() * (u_.transpose() * yc));
}

double CenteredSolver::solve_with_rss(const Eigen::VectorXd& y, Eigen::VectorXd* coef) const {
    const Eigen::VectorXd yc = center_within_cells(y, *plan_);
    if (cols() == 0) {
        if (coef) coef->resize(0);
        return yc.squaredNorm();
    }
    const Eigen::VectorXd theta = v_ * (sv_.cwiseInverse().asDiagonal() * (u_.transpose() * yc));
    const double rss = (yc - centered_ * theta).squaredNorm();
    if (coef) *coef = theta;
    return rss;
}

Eigen::MatrixXd CenteredSolver::gram_inverse() const {
    return v_ * sv_.cwiseAbs2().cwiseInverse().asDiagonal() * v_.transpose();
}

PlmFit assemble_fit(const Dataset& ds, const PartitionPlan& plan, const Eigen::VectorXd& beta,
                    const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cov_unit) {
    PlmFit f;
    f.beta = beta;
    f.gram = gram;
    f.plan = plan;

    const Eigen::VectorXd partial = ds.y - ds.x * beta;
    f.alpha.resize(plan.n_cells());
    f.residuals.resize(ds.n());
    for (Eigen::Index j = 0; j < plan.n_cells(); ++j) {
        const auto& cell = plan.cells[static_cast<std::size_t>(j)];
        double mean = 0.0;
        for (const Eigen::Index row : cell) mean += partial(row);
        mean /= static_cast<double>(cell.size());
        f.alpha(j) = mean;
        for (const Eigen::Index row : cell) f.residuals(row) = partial(row) - mean;
    }
    f.rss = f.residuals.squaredNorm();
    f.sigma2 = sigma2_hat(f.rss, ds.n(), plan.n_cells());
    f.cov_beta = f.sigma2 * cov_unit;
    return f;
}

PlmFit fit(const Dataset& ds, const PartitionPlan& plan) {
    ds.validate();
    check_plan_covers(plan, ds.n());
    const CenteredSolver solver(ds.x, plan);
    const Eigen::VectorXd beta = solver.solve(ds.y);
    return assemble_fit(ds, plan, beta, solver.gram(), solver.gram_inverse());
}

Eigen::VectorXd residualize(const Dataset& ds, const PlmFit& f) {
    if (!f.beta.allFinite()) throw InvalidArgument("fit has non-finite coefficients");
    return ds.y - ds.x * f.beta;
}

}  // namespace plmcell

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <vector>

#include "plmcell/dataset.hpp"
#include "plmcell/partition.hpp"
#include "plmcell/rng.hpp"

namespace testutil {

// Dataset with a single continuous Z column.
inline plmcell::Dataset simple_dataset(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& z) {
    plmcell::Dataset ds;
    ds.y = y;
    ds.x = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        ds.x_names.push_back("x" + std::to_string(j + 1));
    ds.z_continuous = z;
    ds.zc_names = {"z"};
    return ds;
}

inline plmcell::ZSpec single_z() {
    plmcell::ZSpec spec;
    spec.continuous = {"z"};
    spec.strategy = plmcell::Strategy::SingleContinuous;
    return spec;
}

// Random instance for oracle comparisons: y = x*beta + g(z) + noise.
inline plmcell::Dataset random_instance(plmcell::rng::Stream& s, Eigen::Index n,
                                        Eigen::Index p) {
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd z(n), y(n);
    Eigen::VectorXd beta(p);
    for (Eigen::Index j = 0; j < p; ++j) beta(j) = s.uniform(-2.0, 2.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = s.normal();
        z(i) = s.uniform01();
        y(i) = x.row(i).dot(beta) + std::sin(6.0 * z(i)) + 0.5 * s.normal();
    }
    return simple_dataset(y, x, z);
}

// OLS of y on [x, one dummy column per cell]; returns the x coefficients.
// Independent oracle for the centered profile fit.
inline Eigen::VectorXd dummy_ols_beta(const plmcell::Dataset& ds,
                                      const plmcell::PartitionPlan& plan) {
    const Eigen::Index n = ds.n();
    const Eigen::Index p = ds.p();
    const Eigen::Index j = plan.n_cells();
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, p + j);
    full.leftCols(p) = ds.x;
    for (Eigen::Index i = 0; i < n; ++i) full(i, p + plan.cell_of[i]) = 1.0;
    const Eigen::VectorXd coef = full.colPivHouseholderQr().solve(ds.y);
    return coef.head(p);
}

// Structural invariants every partition must satisfy.  Cell sizes within a
// group differ by at most one and are never below I; they stay within
// {I, I+1} whenever the group is large enough for that to be possible.
inline void check_plan(const plmcell::PartitionPlan& plan, Eigen::Index n) {
    REQUIRE(plan.n() == n);
    std::set<Eigen::Index> seen;
    std::vector<std::size_t> group_min, group_max, group_total;
    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
        REQUIRE(!plan.cells[c].empty());
        for (const Eigen::Index row : plan.cells[c]) {
            REQUIRE(row >= 0);
            REQUIRE(row < n);
            REQUIRE(seen.insert(row).second);  // disjoint
            REQUIRE(plan.cell_of[row] == static_cast<Eigen::Index>(c));
        }
        if (!plan.distinct_values) {
            const std::size_t group =
                plan.group_of_cell.empty()
                    ? 0
                    : static_cast<std::size_t>(plan.group_of_cell[c]);
            if (group_min.size() <= group) {
                group_min.resize(group + 1, SIZE_MAX);
                group_max.resize(group + 1, 0);
                group_total.resize(group + 1, 0);
            }
            group_min[group] = std::min(group_min[group], plan.cells[c].size());
            group_max[group] = std::max(group_max[group], plan.cells[c].size());
            group_total[group] += plan.cells[c].size();
            REQUIRE(plan.cells[c].size() >= static_cast<std::size_t>(plan.target_cell_size));
        }
    }
    REQUIRE(seen.size() == static_cast<std::size_t>(n));  // coverage
    if (!plan.distinct_values) {
        const auto i_sz = static_cast<std::size_t>(plan.target_cell_size);
        for (std::size_t g = 0; g < group_total.size(); ++g) {
            if (group_total[g] == 0) continue;
            REQUIRE(group_max[g] - group_min[g] <= 1);
            if (group_total[g] % i_sz <= group_total[g] / i_sz)
                REQUIRE(group_max[g] <= i_sz + 1);
        }
    }
}

// Composite Simpson's rule.
template <typename F>
double simpson(F f, double a, double b, int intervals) {
    if (intervals % 2 != 0) ++intervals;
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace testutil

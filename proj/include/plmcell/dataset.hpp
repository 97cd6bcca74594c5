#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace plmcell {

// Regression data for Y = X*beta + g(Z) + eps.  X enters linearly; the Z
// columns (continuous and/or categorical) drive the cell partition.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;  // n x p
    std::vector<std::string> x_names;

    Eigen::MatrixXd z_continuous;  // n x (#continuous), may have 0 columns
    std::vector<std::string> zc_names;

    Eigen::MatrixXi z_categorical;  // n x (#categorical), level codes
    std::vector<std::string> zd_names;
    std::vector<std::vector<std::string>> zd_levels;  // level labels per column

    Eigen::Index n() const { return y.size(); }
    Eigen::Index p() const { return x.cols(); }

    // Index of a named column; -1 if absent.
    int zc_index(const std::string& name) const;
    int zd_index(const std::string& name) const;

    // Throws InvalidArgument on non-finite values, n <= p, or duplicate names.
    void validate() const;
};

enum class Strategy {
    SingleContinuous,         // order by the only continuous Z column
    CategoricalSplit,         // split by category, order by the continuous column
    OrderByComponent,         // order by one named continuous column
    FirstPrincipalComponent,  // order by PC1 of the standardized continuous Z block
    DistinctValues,           // one cell per distinct (group, value); ignores I
};

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Which Z columns drive the partition and how observations are ordered.
struct ZSpec {
    std::vector<std::string> continuous;
    std::vector<std::string> categorical;
    Strategy strategy = Strategy::SingleContinuous;
    std::string order_column;  // OrderByComponent only

    // Consistency with the dataset: columns exist, strategy matches the
    // column layout (e.g. CategoricalSplit needs >=1 categorical and exactly
    // one continuous column).  Throws InvalidArgument.
    void validate(const Dataset& ds) const;
};

}  // namespace plmcell

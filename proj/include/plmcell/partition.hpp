#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "plmcell/dataset.hpp"

namespace plmcell {

// Result of ordering the observations along the support of Z.
struct Ordering {
    std::vector<Eigen::Index> perm;  // sorts the ordering coordinate ascending
    std::vector<Eigen::Index> group_starts;  // offsets into perm; size n_groups+1
    std::vector<int> group_codes;            // combined category code per group
    std::vector<std::string> group_labels;   // display label per group; empty if ungrouped
    std::vector<double> coordinate;          // ordering coordinate per original row

    Eigen::Index n() const { return static_cast<Eigen::Index>(perm.size()); }
    Eigen::Index n_groups() const { return static_cast<Eigen::Index>(group_starts.size()) - 1; }
};

// Assignment of the n observations to contiguous cells of near-equal size.
struct PartitionPlan {
    std::vector<Eigen::Index> cell_of;             // length n
    std::vector<std::vector<Eigen::Index>> cells;  // original row indices per cell
    int target_cell_size = 0;                      // requested I; 0 in distinct-values mode
    bool distinct_values = false;
    std::vector<int> group_of_cell;          // group index per cell; empty if ungrouped
    std::vector<std::string> group_labels;   // display label per group index
    std::vector<std::string> warnings;       // e.g. groups smaller than 2*I

    Eigen::Index n() const { return static_cast<Eigen::Index>(cell_of.size()); }
    Eigen::Index n_cells() const { return static_cast<Eigen::Index>(cells.size()); }
    // Mean realized cell size n/J; equals I when I divides every group.
    double mean_cell_size() const {
        return static_cast<double>(n()) / static_cast<double>(n_cells());
    }
};

// Orders observations by the strategy's coordinate, grouped by category when
// categorical columns are present.  Sort is by (group, coordinate, original
// index), so ties are broken deterministically.
Ordering order_observations(const Dataset& ds, const ZSpec& spec);

// Cuts each group's ordered run into cells of size I, with the remainder r
// spread by enlarging the last r cells of the group to I+1.  Requires I >= 2
// and every group at least I observations.
PartitionPlan assign_cells(const Ordering& ordering, int target_cell_size);

// One cell per distinct (group, coordinate value); cells of size 1 allowed.
PartitionPlan distinct_value_cells(const Ordering& ordering);

// order_observations + assign_cells / distinct_value_cells per the strategy.
PartitionPlan make_partition(const Dataset& ds, const ZSpec& spec, int target_cell_size);

}  // namespace plmcell

#include "plmcell/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plmcell/errors.hpp"

namespace plmcell {

namespace {

// First principal component scores of the standardized continuous block.
Eigen::VectorXd pc1_scores(const Dataset& ds, const ZSpec& spec) {
    const Eigen::Index n = ds.n();
    const Eigen::Index q = static_cast<Eigen::Index>(spec.continuous.size());
    Eigen::MatrixXd s(n, q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const Eigen::VectorXd col = ds.z_continuous.col(ds.zc_index(spec.continuous[j]));
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / double(n - 1));
        if (!(sd > 0.0))
            throw InvalidArgument("zero-variance column " + spec.continuous[j] +
                                  " cannot be ordered by principal component");
        s.col(j) = (col.array() - mean) / sd;
    }
    const Eigen::MatrixXd corr = s.transpose() * s / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success)
        throw InvalidArgument("eigendecomposition of the Z correlation matrix failed");
    Eigen::VectorXd v = eig.eigenvectors().col(q - 1);  // largest eigenvalue is last
    // Deterministic sign: largest-magnitude loading positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    return s * v;
}

std::string combined_label(const Dataset& ds, const std::vector<int>& zd_cols,
                           Eigen::Index row) {
    std::string label;
    for (std::size_t k = 0; k < zd_cols.size(); ++k) {
        if (k > 0) label += "|";
        const int code = ds.z_categorical(row, zd_cols[k]);
        label += ds.zd_levels[zd_cols[k]][static_cast<std::size_t>(code)];
    }
    return label;
}

}  // namespace

Ordering order_observations(const Dataset& ds, const ZSpec& spec) {
    spec.validate(ds);
    const Eigen::Index n = ds.n();

    // Ordering coordinate.
    Eigen::VectorXd coord;
    switch (spec.strategy) {
        case Strategy::SingleContinuous:
        case Strategy::CategoricalSplit:
        case Strategy::DistinctValues:
            coord = ds.z_continuous.col(ds.zc_index(spec.continuous[0]));
            break;
        case Strategy::OrderByComponent:
            coord = ds.z_continuous.col(ds.zc_index(spec.order_column));
            break;
        case Strategy::FirstPrincipalComponent:
            coord = pc1_scores(ds, spec);
            break;
    }
    if (!coord.allFinite()) throw InvalidArgument("ordering coordinate has non-finite values");

    // Combined category code per row (single group when no categorical columns).
    std::vector<int> zd_cols;
    for (const auto& c : spec.categorical) zd_cols.push_back(ds.zd_index(c));
    std::vector<int> code(n, 0);
    if (!zd_cols.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            int c = 0;
            for (const int j : zd_cols)
                c = c * static_cast<int>(ds.zd_levels[j].size()) + ds.z_categorical(i, j);
            code[i] = c;
        }
    }

    Ordering out;
    out.perm.resize(n);
    std::iota(out.perm.begin(), out.perm.end(), Eigen::Index{0});
    std::sort(out.perm.begin(), out.perm.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (code[a] != code[b]) return code[a] < code[b];
        if (coord(a) != coord(b)) return coord(a) < coord(b);
        return a < b;  // stable with respect to original index
    });

    out.coordinate.assign(coord.data(), coord.data() + n);
    out.group_starts.push_back(0);
    for (Eigen::Index k = 1; k < n; ++k)
        if (code[out.perm[k]] != code[out.perm[k - 1]]) out.group_starts.push_back(k);
    out.group_starts.push_back(n);
    for (std::size_t g = 0; g + 1 < out.group_starts.size(); ++g) {
        const Eigen::Index row = out.perm[out.group_starts[g]];
        out.group_codes.push_back(code[row]);
        if (!zd_cols.empty()) out.group_labels.push_back(combined_label(ds, zd_cols, row));
    }
    return out;
}

PartitionPlan assign_cells(const Ordering& ordering, int target_cell_size) {
    if (target_cell_size < 2)
        throw InvalidArgument("cell size I must be at least 2; with I=1 the cell means absorb "
                              "everything");
    const Eigen::Index n = ordering.n();
    const Eigen::Index i_sz = target_cell_size;

    PartitionPlan plan;
    plan.target_cell_size = target_cell_size;
    plan.cell_of.assign(n, -1);
    plan.group_labels = ordering.group_labels;

    for (Eigen::Index g = 0; g < ordering.n_groups(); ++g) {
        const Eigen::Index lo = ordering.group_starts[g];
        const Eigen::Index hi = ordering.group_starts[g + 1];
        const Eigen::Index m = hi - lo;
        const std::string gname =
            ordering.group_labels.empty() ? "" : " (group " + ordering.group_labels[g] + ")";
        if (m < i_sz)
            throw InvalidArgument("group has " + std::to_string(m) +
                                  " observations, fewer than the cell size " +
                                  std::to_string(target_cell_size) + gname);
        if (m < 2 * i_sz)
            plan.warnings.push_back("group with " + std::to_string(m) +
                                    " observations is smaller than twice the cell size" + gname);

        // J = floor(m/I) cells, spread as evenly as possible with the larger
        // cells at the end.  When m mod I <= J this is exactly "the last
        // (m mod I) cells get I+1"; small groups (m < I*(I-1)) cannot always
        // stay within {I, I+1}, and then the trailing cells absorb the rest.
        const Eigen::Index q = m / i_sz;
        const Eigen::Index base = m / q;
        const Eigen::Index r = m % q;
        Eigen::Index pos = lo;
        for (Eigen::Index c = 0; c < q; ++c) {
            const Eigen::Index size = base + (c >= q - r ? 1 : 0);
            std::vector<Eigen::Index> members;
            members.reserve(size);
            for (Eigen::Index k = 0; k < size; ++k) members.push_back(ordering.perm[pos++]);
            for (const Eigen::Index row : members)
                plan.cell_of[row] = static_cast<Eigen::Index>(plan.cells.size());
            plan.cells.push_back(std::move(members));
            if (!ordering.group_codes.empty())
                plan.group_of_cell.push_back(static_cast<int>(g));
        }
    }
    for (const Eigen::Index c : plan.cell_of)
        if (c < 0) throw Error("internal: observation left without a cell");
    return plan;
}

PartitionPlan distinct_value_cells(const Ordering& ordering) {
    const Eigen::Index n = ordering.n();
    PartitionPlan plan;
    plan.target_cell_size = 0;
    plan.distinct_values = true;
    plan.cell_of.assign(n, -1);
    plan.group_labels = ordering.group_labels;

    for (Eigen::Index g = 0; g < ordering.n_groups(); ++g) {
        const Eigen::Index lo = ordering.group_starts[g];
        const Eigen::Index hi = ordering.group_starts[g + 1];
        Eigen::Index k = lo;
        while (k < hi) {
            const double v = ordering.coordinate[ordering.perm[k]];
            std::vector<Eigen::Index> members;
            while (k < hi && ordering.coordinate[ordering.perm[k]] == v)
                members.push_back(ordering.perm[k++]);
            for (const Eigen::Index row : members)
                plan.cell_of[row] = static_cast<Eigen::Index>(plan.cells.size());
            plan.cells.push_back(std::move(members));
            if (!ordering.group_codes.empty())
                plan.group_of_cell.push_back(static_cast<int>(g));
        }
    }
    return plan;
}

PartitionPlan make_partition(const Dataset& ds, const ZSpec& spec, int target_cell_size) {
    const Ordering ordering = order_observations(ds, spec);
    if (spec.strategy == Strategy::DistinctValues) return distinct_value_cells(ordering);
    return assign_cells(ordering, target_cell_size);
}

}  // namespace plmcell

#include "plmcell/dataset.hpp"

#include <set>

#include "plmcell/errors.hpp"

namespace plmcell {

int Dataset::zc_index(const std::string& name) const {
    for (std::size_t i = 0; i < zc_names.size(); ++i)
        if (zc_names[i] == name) return static_cast<int>(i);
    return -1;
}

int Dataset::zd_index(const std::string& name) const {
    for (std::size_t i = 0; i < zd_names.size(); ++i)
        if (zd_names[i] == name) return static_cast<int>(i);
    return -1;
}

void Dataset::validate() const {
    const Eigen::Index nn = n();
    if (nn == 0) throw InvalidArgument("dataset is empty");
    if (x.rows() != nn || (z_continuous.size() > 0 && z_continuous.rows() != nn) ||
        (z_categorical.size() > 0 && z_categorical.rows() != nn))
        throw InvalidArgument("dataset blocks have inconsistent row counts");
    if (nn <= p()) throw InvalidArgument("need more observations than linear covariates");
    if (!y.allFinite() || !x.allFinite() ||
        (z_continuous.size() > 0 && !z_continuous.allFinite()))
        throw InvalidArgument("dataset contains non-finite values");

    std::set<std::string> seen;
    auto check = [&seen](const std::vector<std::string>& names) {
        for (const auto& s : names)
            if (!seen.insert(s).second) throw InvalidArgument("duplicate column name: " + s);
    };
    check(x_names);
    check(zc_names);
    check(zd_names);
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::SingleContinuous: return "single";
        case Strategy::CategoricalSplit: return "categorical-split";
        case Strategy::OrderByComponent: return "component";
        case Strategy::FirstPrincipalComponent: return "pca";
        case Strategy::DistinctValues: return "distinct";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "single") return Strategy::SingleContinuous;
    if (name == "categorical-split") return Strategy::CategoricalSplit;
    if (name == "component") return Strategy::OrderByComponent;
    if (name == "pca") return Strategy::FirstPrincipalComponent;
    if (name == "distinct") return Strategy::DistinctValues;
    throw InvalidArgument("unknown ordering strategy: " + name);
}

void ZSpec::validate(const Dataset& ds) const {
    if (continuous.empty() && categorical.empty())
        throw InvalidArgument("ZSpec names no columns");
    for (const auto& c : continuous)
        if (ds.zc_index(c) < 0) throw InvalidArgument("unknown continuous Z column: " + c);
    for (const auto& c : categorical)
        if (ds.zd_index(c) < 0) throw InvalidArgument("unknown categorical Z column: " + c);

    switch (strategy) {
        case Strategy::SingleContinuous:
            if (continuous.size() != 1 || !categorical.empty())
                throw InvalidArgument(
                    "single-continuous ordering needs exactly one continuous column and no "
                    "categorical columns");
            break;
        case Strategy::CategoricalSplit:
            if (categorical.empty() || continuous.size() != 1)
                throw InvalidArgument(
                    "categorical-split ordering needs >=1 categorical and exactly one "
                    "continuous column");
            break;
        case Strategy::OrderByComponent: {
            if (!categorical.empty())
                throw InvalidArgument("component ordering does not take categorical columns");
            bool found = false;
            for (const auto& c : continuous) found = found || c == order_column;
            if (!found)
                throw InvalidArgument("ordering column " + order_column +
                                      " is not among the continuous Z columns");
            break;
        }
        case Strategy::FirstPrincipalComponent:
            if (continuous.size() < 2)
                throw InvalidArgument("principal-component ordering needs >=2 continuous columns");
            if (!categorical.empty())
                throw InvalidArgument(
                    "principal-component ordering does not take categorical columns");
            break;
        case Strategy::DistinctValues:
            if (continuous.size() != 1)
                throw InvalidArgument(
                    "distinct-values ordering needs exactly one continuous column");
            break;
    }
}

}  // namespace plmcell

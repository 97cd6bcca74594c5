#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "plmcell/estimator.hpp"
#include "plmcell/inference.hpp"
#include "plmcell/io.hpp"

namespace plmcell::cli {

// Options shared by the data-driven subcommands.
struct DataOptions {
    std::string data_path;
    ModelSpec model;
    std::uint64_t seed = 0;
    std::string out_dir;  // empty: no files, stdout only
    int threads = 0;
};

struct LoadedModel {
    Dataset dataset;
    ZSpec zspec;
    PartitionPlan plan;
};

// Loads the CSV, rejects constant linear columns, builds the partition.
LoadedModel load_model(const DataOptions& opts);

nlohmann::json fit_report_json(const DataOptions& opts, const LoadedModel& lm, const PlmFit& f);
nlohmann::json test_report_json(const TestReport& report);

// Parses "name=0,name=0,..." into constraint rows against the linear columns.
LinearHypothesis parse_constraints(const std::string& spec, const Dataset& ds);
LinearHypothesis load_constraint_file(const std::string& path, Eigen::Index p);

// Joins an output path inside the out dir; creates the directory on demand.
std::string out_path(const std::string& out_dir, const std::string& name);

// CSV of a curve estimate list: level,grid,ghat,var_ghat.
std::string curves_csv(const std::vector<CurveEstimate>& curves);

void emit_report(const nlohmann::json& report, const std::string& out_dir,
                 const std::string& filename);

}  // namespace plmcell::cli

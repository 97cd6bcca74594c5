#pragma once

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "plmcell/simulation.hpp"

namespace plmcell::cli {

// One [section] of a study configuration file.
struct StudyConfig {
    std::string name;
    std::string kind;  // table | rate | null | power
    Example example = Example::Ex1;
    std::vector<Eigen::Index> n_values;
    std::vector<int> cell_sizes;
    int replicates = 100;
    std::uint64_t seed = 0;
    double delta = 0.0;                 // table studies (Ex3 bump defaults handled below)
    std::vector<double> deltas;         // power studies
    int bootstrap = 500;
    double level = 0.05;
    std::string test = "t1";            // power studies: t1 | t2
    double rho = 0.5;
};

// key = value sections; '#' comments; lists are comma- or space-separated.
std::vector<StudyConfig> parse_study_config(const std::string& path);

// Runs one study, writes its CSV outputs under out_dir, returns the summary
// entry (files written, key numbers, wall time).
nlohmann::json run_study(const StudyConfig& config, const std::string& out_dir, int threads);

}  // namespace plmcell::cli

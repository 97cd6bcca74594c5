#pragma once

#include <string>
#include <vector>

#include "plmcell/dataset.hpp"

namespace plmcell {

// Column roles for building a Dataset from a CSV file.
struct ModelSpec {
    std::string response;
    std::vector<std::string> linear;
    std::vector<std::string> nonparam_continuous;
    std::vector<std::string> nonparam_categorical;
    int cell_size = 5;
    std::string ordering = "auto";

    void validate() const;  // disjoint column sets, response not a covariate
};

// Loads the referenced columns from a headered CSV file.  Continuous columns
// must parse as numbers; categorical columns are taken as strings and mapped
// to level codes in lexicographic order.  Rows with missing values in any
// referenced column are rejected with their row numbers.
Dataset load_csv(const std::string& path, const ModelSpec& spec);

// ZSpec from the model spec's ordering name ("auto" picks a strategy from the
// column layout; other values: single, pca, distinct, component:<name>).
ZSpec zspec_from_model(const ModelSpec& spec, const Dataset& ds);

// Writes text to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

// %.17g formatting used for every float in CSV output.
std::string format_double(double v);

}  // namespace plmcell

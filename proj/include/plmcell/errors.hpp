#pragma once

#include <stdexcept>
#include <string>

namespace plmcell {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid input that violates a documented precondition.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// Centered Gram matrix (numerically) singular: the parametric design has no
// within-cell variation left after centering, or p exceeds the residual
// degrees of freedom.
class SingularGram : public Error {
public:
    SingularGram(const std::string& what, double smallest_sv)
        : Error(what), smallest_singular_value(smallest_sv) {}
    double smallest_singular_value;
};

// Constraint matrix does not have full row rank.
class RankDeficientConstraint : public Error {
public:
    explicit RankDeficientConstraint(const std::string& what) : Error(what) {}
};

// Local polynomial design singular at some evaluation point.
class BandwidthTooSmall : public Error {
public:
    BandwidthTooSmall(const std::string& what, double at_point)
        : Error(what), grid_point(at_point) {}
    double grid_point;
};

// A category level has too few observations for curve estimation.
class GroupTooSmall : public Error {
public:
    explicit GroupTooSmall(const std::string& what) : Error(what) {}
};

// CSV ingestion problems (missing column, non-numeric value, empty file).
class CsvError : public Error {
public:
    explicit CsvError(const std::string& what) : Error(what) {}
};

// Study configuration file problems; carries a 1-based line number when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line_no = 0)
        : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
          line(line_no) {}
    int line;
};

}  // namespace plmcell

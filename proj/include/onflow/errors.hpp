#pragma once

#include <stdexcept>
#include <string>

namespace onflow {

// Input-data failures (bad file, malformed cell, unknown or ambiguous
// asset name). Messages name the offending row/column.
class DataError : public std::runtime_error {
public:
    enum class Kind { missing_file, malformed, unknown_asset, ambiguous_asset };

    DataError(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Statistically unusable data, e.g. a zero-variance column fed to the
// correlation estimator.
class DegenerateDataError : public std::runtime_error {
public:
    explicit DegenerateDataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure in an otherwise valid problem (ill-conditioned matrix).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// ODE integration blew up (non-finite or runaway logits).
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Grid-based routine asked for more assets than it supports.
class UnsupportedDimensionError : public std::invalid_argument {
public:
    explicit UnsupportedDimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace onflow

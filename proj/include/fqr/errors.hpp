#pragma once

#include <stdexcept>
#include <string>

namespace fqr {

/// Invalid parameter or configuration (bad degree, alpha outside (0,1), ...).
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent input data (CSV defects, grid mismatches, ...).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (singular inner system, non-convergence escalated by a caller).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fqr

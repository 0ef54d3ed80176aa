#pragma once

#include <stdexcept>
#include <string>

namespace boolperc {

// Raised when requested parameters are mathematically or physically
// infeasible (bad brackets, saturated models, impossible truncation targets).
// The CLI maps this to exit code 3.
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed run configuration. CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Internal invariant breach. CLI exit code 4.
class internal_error : public std::logic_error {
public:
    explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace boolperc

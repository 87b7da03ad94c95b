#pragma once

#include <stdexcept>
#include <string>

namespace cip {

// Bad user input: configs, CLI flags, malformed files, precondition
// violations. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures at run time that are not the user's fault: linear solves that do
// not converge, line searches that stall, non-finite values. Exit code 1.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cip

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace calign {

// Coarse classification of failures. The C API and the CLI map these onto
// status / exit codes.
enum class ErrorKind {
    Input,          // malformed or non-finite data, parse failures
    Dimension,      // shape mismatch between operands
    Parameter,      // invalid hyperparameter or precondition on arguments
    DegenerateKernel,
    NoSignal,
    SingularSystem,
    NonConverged,
    Numeric,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

// Parse failure with the 1-based line number of the offending record.
class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(ErrorKind::Dimension, what) {}
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(ErrorKind::Parameter, what) {}
};

// A kernel whose centered matrix (or population second moment) vanishes.
// `indices` lists offending base kernels when raised from a bank.
class DegenerateKernel : public Error {
public:
    explicit DegenerateKernel(const std::string& what, std::vector<std::size_t> indices = {})
        : Error(ErrorKind::DegenerateKernel, what), indices_(std::move(indices)) {}
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }

private:
    std::vector<std::size_t> indices_;
};

class NoSignal : public Error {
public:
    explicit NoSignal(const std::string& what) : Error(ErrorKind::NoSignal, what) {}
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& what) : Error(ErrorKind::SingularSystem, what) {}
};

// Iteration budget exhausted. Carries the best iterate found and the
// stationarity residual (or duality gap) at that iterate.
class NonConverged : public Error {
public:
    NonConverged(const std::string& what, Eigen::VectorXd best, double residual)
        : Error(ErrorKind::NonConverged, what), best_(std::move(best)), residual_(residual) {}
    const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
    double residual() const noexcept { return residual_; }

private:
    Eigen::VectorXd best_;
    double residual_;
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace calign

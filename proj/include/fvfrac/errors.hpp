#pragma once

#include <stdexcept>
#include <string>

namespace fvfrac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (mesh exchange format, config files).
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class MaterialError : public Error {
public:
    using Error::Error;
};

/// Raised when a local interaction-region system cannot be eliminated.
class DiscretizationError : public Error {
public:
    DiscretizationError(int region, double condition, const std::string& what)
        : Error(what), region_(region), condition_(condition) {}
    int region() const noexcept { return region_; }
    double condition() const noexcept { return condition_; }

private:
    int region_;
    double condition_;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

/// The global problem has no Dirichlet constraint and therefore a rigid-motion nullspace.
class IndefiniteProblemError : public AssemblyError {
public:
    using AssemblyError::AssemblyError;
};

class SolverError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public SolverError {
public:
    ConvergenceError(int iterations, double residual, const std::string& what)
        : SolverError(what), iterations_(iterations), residual_(residual) {}
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

class OracleError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fvfrac

#pragma once

#include <stdexcept>
#include <string>

namespace pdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The potential or parameters leave the admissible set (no bound state,
/// resonance below the continuum edge, infeasible iterate).
class DomainError : public Error {
public:
    using Error::Error;
};

class NoBoundState : public DomainError {
public:
    NoBoundState() : DomainError("H_V has no negative eigenvalue on the computational domain") {}
};

class ResonanceBelowCutoff : public DomainError {
public:
    explicit ResonanceBelowCutoff(double lambda_plus_mu)
        : DomainError("lambda + mu = " + std::to_string(lambda_plus_mu) +
                      " <= 0: forcing does not reach the continuum") {}
};

class InfeasiblePoint : public DomainError {
public:
    using DomainError::DomainError;
};

/// A linear solve or integration failed numerically.
class SolverFailure : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace pdp

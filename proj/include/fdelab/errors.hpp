#pragma once

#include <stdexcept>
#include <string>

namespace fdelab {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad inputs: parameters, grids, configs. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// Numerical failures during a solve or a fit. The CLI maps these to exit code 3.
class SolverError : public Error {
public:
    using Error::Error;
};

// Input errors.
class DomainError : public InputError { public: using InputError::InputError; };
class SubcriticalBetaError : public InputError { public: using InputError::InputError; };
class UnsupportedRegime : public InputError { public: using InputError::InputError; };
class WrongBetaError : public InputError { public: using InputError::InputError; };
class RegimeError : public InputError { public: using InputError::InputError; };
class OutOfRange : public InputError { public: using InputError::InputError; };
class GridMismatch : public InputError { public: using InputError::InputError; };
class BoundViolation : public InputError { public: using InputError::InputError; };
class InsufficientSamples : public InputError { public: using InputError::InputError; };
class ConfigError : public InputError { public: using InputError::InputError; };

// Solver errors.
class IntegrationFailure : public SolverError { public: using SolverError::SolverError; };
class PositivityLoss : public SolverError { public: using SolverError::SolverError; };
class InsufficientRange : public SolverError { public: using SolverError::SolverError; };
class SignMismatch : public SolverError { public: using SolverError::SolverError; };
class SlopeMismatch : public SolverError { public: using SolverError::SolverError; };
class DivergentIntegral : public SolverError { public: using SolverError::SolverError; };
class NegativeValue : public SolverError { public: using SolverError::SolverError; };
class SingularSystem : public SolverError { public: using SolverError::SolverError; };
class NoFeasibleLambda : public SolverError { public: using SolverError::SolverError; };

/// Process exit code for an exception escaping a CLI command.
int exit_code_for(const std::exception& e) noexcept;

} // namespace fdelab

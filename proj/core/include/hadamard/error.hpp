#pragma once

#include <stdexcept>
#include <string>

namespace hadamard {

/// A documented precondition was violated by the caller (bad config, shape
/// mismatch, non-SPD tensor, ...). The command-line tool exits with status 2.
class InvalidInput : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver its contract (loss of
/// definiteness along a perturbation, solver non-convergence, ambiguous
/// branch matching). The command-line tool exits with status 3.
class NumericalFailure : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace hadamard

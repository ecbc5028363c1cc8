#pragma once

#include <stdexcept>
#include <string>

namespace openqfr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument is outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure produced a result that violates its contract.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The Liouvillian kernel is not one-dimensional.
class DegenerateKernel : public Error {
public:
    DegenerateKernel(int multiplicity)
        : Error("Liouvillian kernel has dimension " + std::to_string(multiplicity) +
                "; steady state is not unique"),
          multiplicity_(multiplicity) {}

    int multiplicity() const { return multiplicity_; }

private:
    int multiplicity_;
};

/// No sign change of G - 1 was found in the scanned range.
class NoRootInRange : public Error {
public:
    using Error::Error;
};

/// Conditional probabilities still depend on the initial state.
class StillTransient : public Error {
public:
    using Error::Error;
};

} // namespace openqfr

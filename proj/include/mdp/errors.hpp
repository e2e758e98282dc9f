#pragma once

#include <stdexcept>
#include <string>

namespace mdp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two eigenvalues closer than the requested gap; eigenvectors are not differentiable there.
struct SpectralGapError : Error {
  using Error::Error;
};

struct NotPsdError : Error {
  using Error::Error;
};

struct SingularError : Error {
  using Error::Error;
};

// Point outside the open domain of a model or density.
struct DomainError : Error {
  using Error::Error;
};

// Finite-difference stencil could not be kept inside the domain of a map.
struct DerivativeError : Error {
  using Error::Error;
};

struct OffSphereError : Error {
  using Error::Error;
};

struct OffGroupError : Error {
  using Error::Error;
};

// Euler-Maruyama step halved too often without landing in the domain.
struct StepRejectedError : Error {
  using Error::Error;
};

struct RankDeficientFit : Error {
  using Error::Error;
};

struct VariableMismatch : Error {
  using Error::Error;
};

// Malformed parameters or configuration supplied by a caller.
struct InvalidArgument : Error {
  using Error::Error;
};

}  // namespace mdp

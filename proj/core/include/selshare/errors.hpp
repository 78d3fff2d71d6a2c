#pragma once

#include <stdexcept>
#include <string>

namespace selshare {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument outside the domain of a function (non-finite input, zero scale).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: simulation settings, sampler settings, parameter files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invariant-violating data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The data cannot identify the requested model parameters.
class IdentificationError : public Error {
 public:
  using Error::Error;
};

/// An MCMC result failed its convergence check where convergence was required.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace selshare

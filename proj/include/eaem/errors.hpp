#pragma once

#include <stdexcept>
#include <string>

namespace eaem {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where a formula is valid.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Bad or incomplete configuration data (tables, compositions, jobs).
class ConfigurationError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure (quadrature, root search, eigensolver) failed.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Not enough usable data to form an estimate.
class EstimationError : public Error {
public:
  using Error::Error;
};

} // namespace eaem

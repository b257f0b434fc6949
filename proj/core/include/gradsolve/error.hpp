#pragma once

#include <stdexcept>
#include <string>

namespace gradsolve {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand lengths or operator dimensions do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An index argument lies outside its admissible range.
class IndexError : public Error {
public:
  using Error::Error;
};

/// A non-finite or non-positive quantity appeared where the iteration needs a
/// finite positive one.
class NumericalBreakdown : public Error {
public:
  using Error::Error;
};

/// The gradient handed to a steplength kernel is exactly zero. Callers are
/// expected to test for convergence first; this is raised when they did not.
class ConvergedSignal : public Error {
public:
  using Error::Error;
};

/// A retarded-gradient schedule produced tau(k) or rho(k) outside the
/// admissible window.
class ScheduleViolation : public Error {
public:
  using Error::Error;
};

/// A rule asked for state the previous iterations never produced.
class RuleSequencingError : public Error {
public:
  using Error::Error;
};

/// Invalid user configuration: rule strings, generator specs, flags.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed or unsupported input file.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Matrix input that is not symmetric.
class SymmetryError : public Error {
public:
  using Error::Error;
};

/// A diagnostic was requested on a history recorded without it.
class MissingDiagnosticsError : public Error {
public:
  using Error::Error;
};

}  // namespace gradsolve

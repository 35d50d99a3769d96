#pragma once

#include <stdexcept>
#include <string>

namespace plc {

// Base of every error the library raises. `validation()` separates bad input
// (config, parameters, data) from runtime failures so the CLI can map it to
// an exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, bool validation = true)
      : std::runtime_error(what), validation_(validation) {}
  bool validation() const noexcept { return validation_; }

 private:
  bool validation_;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a closed form (e.g. negative time).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Grid too coarse to resolve a replacement wave.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Two series that must share a grid do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Integrator step would violate a stability or positivity bound.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

// Price series whose log transform is undefined.
class DegenerateSeriesError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// No candidate in a grid search produced a valid model.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Data does not cover the time span a fit needs.
class HorizonError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what, false) {}
};

}  // namespace plc

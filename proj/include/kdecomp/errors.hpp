#pragma once

#include <stdexcept>
#include <string>

namespace kdecomp {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class BracketError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class ParameterizationError : public Error {
public:
  using Error::Error;
};

class DegenerateDataError : public Error {
public:
  using Error::Error;
};

// m < 2 components or p < 2 quantile intervals: nothing to compare.
class TestPreconditionError : public Error {
public:
  using Error::Error;
};

// A null weight of zero makes the chi-square denominator vanish.
class DegenerateCategoryError : public Error {
public:
  using Error::Error;
};

class SchemaError : public Error {
public:
  using Error::Error;
};

class RowError : public Error {
public:
  RowError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class BinningError : public Error {
public:
  using Error::Error;
};

}  // namespace kdecomp

#pragma once

#include <stdexcept>
#include <string>

namespace upec {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed netlist text. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Raised when the SAT solver hits its conflict budget. Never treated as unsat.
class BudgetExceeded : public Error {
public:
  explicit BudgetExceeded(unsigned long long conflicts)
      : Error("solver conflict budget exhausted after " + std::to_string(conflicts) +
              " conflicts"),
        conflicts_(conflicts) {}

  unsigned long long conflicts() const noexcept { return conflicts_; }

private:
  unsigned long long conflicts_;
};

// Internal consistency failure, e.g. a counterexample that does not replay.
class SoundnessError : public Error {
public:
  using Error::Error;
};

}  // namespace upec

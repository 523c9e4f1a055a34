#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace soslab {

// Precondition or geometry violations (empty boxes, out-of-box edges, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A bad cluster whose boundary lies entirely outside the box.
class DegenerateClusterError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> residual_history = {})
      : std::runtime_error(what), residual_history_(std::move(residual_history)) {}
  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

class StatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace soslab

#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace rflow {

using Node = std::array<int, 3>;

std::string to_string(const Node& node);

/// Base of every error raised by the library. The pipeline maps the derived
/// kinds onto process exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: bad chart, bad config, inadmissible initial data.
class ValidationError : public Error {
public:
  using Error::Error;
};

class ChartMismatchError : public ValidationError {
public:
  ChartMismatchError() : ValidationError("fields live on different charts") {}
};

/// Metric is not positive definite (or not invertible) at `node`.
class SingularMetricError : public Error {
public:
  SingularMetricError(const Node& node, const std::string& why)
      : Error("singular metric at node " + to_string(node) + ": " + why), node_(node) {}
  const Node& node() const { return node_; }

private:
  Node node_;
};

/// Numerical failure that is not a curvature blow-up.
class NumericalError : public Error {
public:
  using Error::Error;
};

class StepUnderflowError : public NumericalError {
public:
  StepUnderflowError(double beta, double step)
      : NumericalError("step underflow at beta=" + std::to_string(beta) +
                       " (step " + std::to_string(step) + ")"),
        beta_(beta) {}
  double beta() const { return beta_; }

private:
  double beta_;
};

class PositivityLossError : public NumericalError {
public:
  PositivityLossError(double beta, const std::string& what)
      : NumericalError("positivity lost at beta=" + std::to_string(beta) + ": " + what),
        beta_(beta) {}
  double beta() const { return beta_; }

private:
  double beta_;
};

/// The flow left the regime where sup|Rm| stays bounded.
class BlowUpError : public Error {
public:
  BlowUpError(double beta, double sup_rm)
      : Error("blow-up detected at beta=" + std::to_string(beta) +
              " with sup|Rm|=" + std::to_string(sup_rm)),
        beta_(beta), sup_rm_(sup_rm) {}
  double beta() const { return beta_; }
  double sup_rm() const { return sup_rm_; }

private:
  double beta_;
  double sup_rm_;
};

/// A homogeneous model was asked for a state at or past its extinction time.
class ExtinctionError : public Error {
public:
  explicit ExtinctionError(double beta_star)
      : Error("model reaches extinction at beta*=" + std::to_string(beta_star)),
        beta_star_(beta_star) {}
  double beta_star() const { return beta_star_; }

private:
  double beta_star_;
};

/// Distance or transport requested outside the half-period guard of the source.
class InjectivityGuardError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

} // namespace rflow

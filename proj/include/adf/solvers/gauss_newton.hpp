#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adf/core/derivation.hpp"

namespace adf {

struct GaussNewtonConfig {
  int max_iterations = 100;
  int max_halvings = 30;
  double initial_step_length = 1.0;
  /// Convergence threshold on the infinity norm of J^T f.
  double tolerance = 1e-10;

  void validate() const {
    if (max_iterations < 1) throw ConfigError("gauss_newton", "max_iterations must be at least 1");
    if (max_halvings < 1) throw ConfigError("gauss_newton", "max_halvings must be positive");
    if (!(initial_step_length > 0)) throw ConfigError("gauss_newton", "initial_step_length must be positive");
    if (!(tolerance > 0)) throw ConfigError("gauss_newton", "tolerance must be positive");
  }
};

enum class Termination { Converged, MaxIterations, LineSearchFailed, SingularNormalEquations };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max-iterations";
    case Termination::LineSearchFailed: return "line-search-failed";
    case Termination::SingularNormalEquations: return "singular-normal-equations";
  }
  return "?";
}

enum class StepStatus { Accepted, Stationary, LineSearchFailed, SingularNormalEquations };

/// Least-squares problem: minimize 1/2 |residual(x, parameters)|^2 over x.
/// `residual` is a differentiable function of the two arguments (x, p).
template <class R>
struct ResidualProblem {
  R residual;
  Value<double> parameters;
  Value<double> initial_guess;
};

template <class R>
ResidualProblem<R> make_residual_problem(R residual, Value<double> parameters, Value<double> initial_guess) {
  return {std::move(residual), std::move(parameters), std::move(initial_guess)};
}

struct GaussNewtonStep {
  Value<double> x;
  double step_length = 0;
  StepStatus status = StepStatus::Accepted;
};

struct GaussNewtonState {
  std::vector<Value<double>> iterates;
  std::vector<double> objective_values;
  double step_length = 0;
  Termination termination = Termination::MaxIterations;

  /// Number of accepted steps.
  std::size_t iterations() const { return iterates.empty() ? 0 : iterates.size() - 1; }
  const Value<double>& solution() const { return iterates.back(); }
};

namespace detail {

inline double half_squared_norm(const Value<double>& r) {
  double s = 0;
  for (double v : r) s += v * v;
  return 0.5 * s;
}

inline Eigen::Map<const Eigen::VectorXd> as_eigen(const Value<double>& v) {
  return {v.data().data(), static_cast<Eigen::Index>(v.size())};
}

inline Eigen::MatrixXd as_eigen(const Matrix<double>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

inline Value<double> like(const Value<double>& shape_of, const Eigen::VectorXd& v) {
  if (shape_of.is_scalar()) return Value<double>(v(0));
  return Value<double>::vector(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Residual and its Jacobian with respect to x at (x, p).
template <AnyBackend B, class R>
std::pair<Value<double>, Eigen::MatrixXd> linearize_residual(const ResidualProblem<R>& problem,
                                                             const Value<double>& x, const B& ab) {
  auto vj = value_and_jacobian(ab, problem.residual, Args<double>{x, problem.parameters});
  if (vj.value.size() < x.size()) {
    throw ShapeError("gauss_newton", "residual has " + std::to_string(vj.value.size()) + " entries for " +
                                         std::to_string(x.size()) + " unknowns");
  }
  return {std::move(vj.value), as_eigen(vj.jacobian.front())};
}

inline double stationarity(const Eigen::MatrixXd& J, const Value<double>& r) {
  return (J.transpose() * as_eigen(r)).lpNorm<Eigen::Infinity>();
}

/// Solves (J^T J) d = -J^T r by Cholesky, falling back to a symmetric-pivot
/// factorization. Returns false when the system is numerically singular.
inline bool normal_equation_direction(const Eigen::MatrixXd& J, const Value<double>& r, Eigen::VectorXd& d) {
  constexpr double min_rcond = 1e-14;
  const Eigen::MatrixXd A = J.transpose() * J;
  const Eigen::VectorXd g = J.transpose() * as_eigen(r);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success && llt.rcond() >= min_rcond) {
    d = llt.solve(-g);
    return true;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= min_rcond)) return false;
  // LDLT solves skip zero pivots, so rank deficiency shows up only in D.
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (!(pivots.minCoeff() >= min_rcond * pivots.maxCoeff())) return false;
  d = ldlt.solve(-g);
  return d.allFinite();
}

template <class R>
GaussNewtonStep step_from(const ResidualProblem<R>& problem, const Value<double>& x, const Eigen::MatrixXd& J,
                          const Value<double>& r, const GaussNewtonConfig& config) {
  Eigen::VectorXd d;
  if (!normal_equation_direction(J, r, d)) return {x, 0.0, StepStatus::SingularNormalEquations};
  if (d.lpNorm<Eigen::Infinity>() == 0) return {x, 0.0, StepStatus::Stationary};

  const double current = half_squared_norm(r);
  const Eigen::VectorXd x0 = as_eigen(x);
  double alpha = config.initial_step_length;
  for (int trial = 0; trial <= config.max_halvings; ++trial) {
    Value<double> candidate = like(x, x0 + alpha * d);
    const double s = half_squared_norm(evaluate(problem.residual, Args<double>{candidate, problem.parameters}));
    if (s < current) return {std::move(candidate), alpha, StepStatus::Accepted};
    alpha /= 2;
  }
  return {x, 0.0, StepStatus::LineSearchFailed};
}

}  // namespace detail

/// 1/2 |residual(x, p)|^2.
template <class R>
double objective(const ResidualProblem<R>& problem, const Value<double>& x) {
  return detail::half_squared_norm(evaluate(problem.residual, Args<double>{x, problem.parameters}));
}

/// One damped step x - alpha (J^T J)^{-1} J^T f. The candidate at the initial
/// step length is tested first and alpha is halved until the objective
/// strictly decreases.
template <AnyBackend B, class R>
GaussNewtonStep gauss_newton_step(const ResidualProblem<R>& problem, const Value<double>& x, const B& ab,
                                  const GaussNewtonConfig& config = {}) {
  config.validate();
  const auto [r, J] = detail::linearize_residual(problem, x, ab);
  return detail::step_from(problem, x, J, r, config);
}

template <AnyBackend B, class R>
GaussNewtonState gauss_newton(const ResidualProblem<R>& problem, const B& ab, const GaussNewtonConfig& config = {}) {
  config.validate();
  GaussNewtonState state;
  Value<double> x = problem.initial_guess;
  state.iterates.push_back(x);
  state.objective_values.push_back(objective(problem, x));

  for (;;) {
    const auto [r, J] = detail::linearize_residual(problem, x, ab);
    if (detail::stationarity(J, r) <= config.tolerance) {
      state.termination = Termination::Converged;
      return state;
    }
    if (state.iterations() >= static_cast<std::size_t>(config.max_iterations)) {
      state.termination = Termination::MaxIterations;
      return state;
    }
    GaussNewtonStep step = detail::step_from(problem, x, J, r, config);
    switch (step.status) {
      case StepStatus::Accepted: break;
      case StepStatus::Stationary: state.termination = Termination::Converged; return state;
      case StepStatus::LineSearchFailed: state.termination = Termination::LineSearchFailed; return state;
      case StepStatus::SingularNormalEquations:
        state.termination = Termination::SingularNormalEquations;
        return state;
    }
    x = std::move(step.x);
    state.step_length = step.step_length;
    state.iterates.push_back(x);
    state.objective_values.push_back(objective(problem, x));
  }
}

}  // namespace adf

#pragma once

#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "adf/core/derivation.hpp"
#include "adf/solvers/gauss_newton.hpp"

namespace adf {

struct NewtonResult {
  Value<double> root;
  bool converged = false;
  int iterations = 0;
};

/// Newton-Raphson for a square system f(x) = 0: x <- x - J^{-1} f(x) until
/// the infinity norm of f(x) is at most `tolerance`.
template <AnyBackend B, class F>
NewtonResult newton_raphson_root(const F& f, Value<double> x0, const B& ab, double tolerance = 1e-12,
                                 int max_iterations = 50) {
  const std::string op = "newton_raphson_root";
  if (!(tolerance > 0)) throw ConfigError(op, "tolerance must be positive");
  if (max_iterations < 1) throw ConfigError(op, "max_iterations must be at least 1");

  NewtonResult result{std::move(x0), false, 0};
  for (;; ++result.iterations) {
    auto vj = value_and_jacobian(ab, f, Args<double>{result.root});
    if (vj.value.size() != result.root.size()) {
      throw ShapeError(op, "system is not square: " + std::to_string(vj.value.size()) + " equations, " +
                               std::to_string(result.root.size()) + " unknowns");
    }
    const Eigen::VectorXd fx = detail::as_eigen(vj.value);
    if (fx.lpNorm<Eigen::Infinity>() <= tolerance) {
      result.converged = true;
      return result;
    }
    if (result.iterations >= max_iterations) return result;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(detail::as_eigen(vj.jacobian.front()));
    if (!(lu.rcond() >= 1e-14)) {
      std::ostringstream where;
      where.precision(17);
      where << "singular Jacobian at iteration " << result.iterations << ", x = (";
      for (std::size_t i = 0; i < result.root.size(); ++i) where << (i ? ", " : "") << result.root[i];
      where << ")";
      throw NumericalError(op, where.str());
    }
    const Eigen::VectorXd next = detail::as_eigen(result.root) - lu.solve(fx);
    result.root = detail::like(result.root, next);
  }
}

}  // namespace adf

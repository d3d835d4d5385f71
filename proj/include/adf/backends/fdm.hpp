#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adf/core/primitives.hpp"
#include "adf/core/value.hpp"

namespace adf {

struct StencilWeights {
  std::vector<int> offsets;
  std::vector<double> weights;
};

/// Weights of the finite-difference rule for the `order`-th derivative on
/// the given integer grid, at unit spacing.
///
/// Solves the moment system sum_j w_j * o_j^k = k! * [k == order] for
/// k = 0..n-1, so the rule is exact for polynomials of degree n-1.
inline StencilWeights fd_weights(std::span<const int> offsets, int order) {
  const auto n = static_cast<int>(offsets.size());
  if (n == 0) throw ConfigError("fd_weights", "empty stencil");
  if (order < 0 || order >= n) {
    throw ConfigError("fd_weights", "derivative order " + std::to_string(order) + " needs more than " +
                                        std::to_string(n) + " grid points");
  }
  if (std::set<int>(offsets.begin(), offsets.end()).size() != offsets.size()) {
    throw ConfigError("fd_weights", "duplicate grid offsets make the moment system singular");
  }

  using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  MatrixL moments(n, n);
  VectorL rhs = VectorL::Zero(n);
  for (int j = 0; j < n; ++j) {
    long double p = 1;
    for (int k = 0; k < n; ++k) {
      moments(k, j) = p;
      p *= offsets[j];
    }
  }
  long double factorial = 1;
  for (int k = 2; k <= order; ++k) factorial *= k;
  rhs(order) = factorial;

  Eigen::FullPivLU<MatrixL> lu(moments);
  if (!lu.isInvertible()) throw ConfigError("fd_weights", "singular moment system");
  const VectorL w = lu.solve(rhs);

  // Weights that vanish exactly in rational arithmetic come out as rounding
  // noise; snap them so the corresponding grid point is never evaluated.
  const long double scale = w.cwiseAbs().maxCoeff();
  StencilWeights out{std::vector<int>(offsets.begin(), offsets.end()), {}};
  for (int j = 0; j < n; ++j) {
    const long double wj = std::abs(w(j)) < 1e-14L * scale ? 0.0L : w(j);
    out.weights.push_back(static_cast<double>(wj));
  }
  return out;
}

struct FDMConfig {
  /// Odd number of points on a central grid.
  int grid_points = 5;
  /// Only first derivatives are estimated directly.
  int derivative_order = 1;
  /// Step is relative_step * (1 + max |x|).
  double relative_step = std::pow(std::numeric_limits<double>::epsilon(), 0.2);

  void validate() const {
    if (grid_points < 3 || grid_points % 2 == 0) {
      throw ConfigError("fdm", "grid_points must be odd and at least 3, got " + std::to_string(grid_points));
    }
    if (derivative_order != 1) throw ConfigError("fdm", "derivative_order must be 1");
    if (!(relative_step > 0) || !std::isfinite(relative_step)) throw ConfigError("fdm", "relative_step must be positive");
  }

  std::vector<int> offsets() const {
    std::vector<int> out;
    for (int o = -(grid_points / 2); o <= grid_points / 2; ++o) out.push_back(o);
    return out;
  }

  StencilWeights stencil() const {
    validate();
    const auto grid = offsets();
    return fd_weights(grid, derivative_order);
  }
};

/// Absolute step used around `xs`.
template <class T>
double fdm_step(const FDMConfig& config, const Args<T>& xs) {
  double scale = 0;
  for (const auto& x : xs) {
    for (const auto& xi : x) scale = std::max(scale, std::abs(value_of(xi)));
  }
  return config.relative_step * (1 + scale);
}

/// Directional derivative of `f` at `xs` by central differencing along the
/// seed direction. Grid points with a zero weight are not evaluated.
template <class F, class T>
PushforwardClosure<T> fdm_pushforward(const FDMConfig& config, const StencilWeights& stencil, const F& f,
                                      const Args<T>& xs) {
  const double h = fdm_step(config, xs);
  return {[f, xs, stencil, h, shapes = shapes_of(xs)](const Args<T>& seed) {
            check_shapes("fdm_pushforward", "tangent seed", seed, shapes);
            std::optional<Value<T>> acc;
            for (std::size_t j = 0; j < stencil.offsets.size(); ++j) {
              const double w = stencil.weights[j];
              if (w == 0) continue;
              const double shift = stencil.offsets[j] * h;
              Args<T> point = xs;
              for (std::size_t i = 0; i < point.size(); ++i) {
                for (std::size_t k = 0; k < point[i].size(); ++k) point[i][k] = point[i][k] + T(shift) * seed[i][k];
              }
              const Value<T> y = evaluate(f, point);
              for (const auto& yk : y) {
                if (!is_finite(yk)) {
                  throw NumericalError("fdm_pushforward", "non-finite function value at stencil offset " +
                                                              std::to_string(stencil.offsets[j]));
                }
              }
              if (!acc) {
                acc = Value<T>::zeros(y.shape());
              } else if (acc->shape() != y.shape()) {
                throw ShapeError("fdm_pushforward", "output shape changed between stencil points");
              }
              for (std::size_t k = 0; k < y.size(); ++k) (*acc)[k] = (*acc)[k] + T(w) * y[k];
            }
            for (std::size_t k = 0; k < acc->size(); ++k) (*acc)[k] = (*acc)[k] / T(h);
            return *acc;
          },
          std::nullopt};
}

template <class F, class T>
PushforwardClosure<T> fdm_pushforward(const FDMConfig& config, const F& f, const Args<T>& xs) {
  return fdm_pushforward(config, config.stencil(), f, xs);
}

}  // namespace adf

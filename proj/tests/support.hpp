#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "adf/adf.hpp"

namespace adf::test {

/// Every stock backend plus all four second-order compositions.
struct Backends {
  Registry registry;
  FdmBackend fdm = make_fdm_backend(registry);
  DualBackend dual = make_dual_backend(registry);
  TapeBackend tape = make_tape_backend(registry);
  HigherOrderBackend<DualBackend, TapeBackend> dual_over_tape = make_higher_order(registry, dual, tape);
  HigherOrderBackend<TapeBackend, DualBackend> tape_over_dual = make_higher_order(registry, tape, dual);
  HigherOrderBackend<DualBackend, DualBackend> dual_over_dual = make_higher_order(registry, dual, dual);
  HigherOrderBackend<TapeBackend, TapeBackend> tape_over_tape = make_higher_order(registry, tape, tape);

  /// Calls `visit(name, backend)` for every exact (non finite-difference)
  /// backend.
  template <class V>
  void for_each_ad(V&& visit) const {
    visit("dual", dual);
    visit("tape", tape);
    visit("dual-over-tape", dual_over_tape);
    visit("tape-over-dual", tape_over_dual);
    visit("dual-over-dual", dual_over_dual);
    visit("tape-over-tape", tape_over_tape);
  }
};

/// Forward-mode dual evaluation exposed as a native Jacobian: one seeded pass
/// per input coordinate.
struct DualAsJacobian {
  template <class F, class T>
  JacobianResult<T> operator()(const F& f, const Args<T>& xs) const {
    JacobianResult<T> J;
    Args<T> seed;
    for (const auto& x : xs) seed.push_back(Value<T>::zeros(x.shape()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Matrix<T> block;
      for (std::size_t c = 0; c < xs[i].size(); ++c) {
        seed[i][c] = T(1);
        const Value<T> column = tangent_part(evaluate(f, lift_dual<T>(xs, &seed)));
        seed[i][c] = T(0);
        if (c == 0) block = Matrix<T>(column.size(), xs[i].size());
        for (std::size_t r = 0; r < column.size(); ++r) block(r, c) = column[r];
      }
      J.push_back(std::move(block));
    }
    return J;
  }
};

/// The same dual evaluation exposed as a native pullback: (J^T w)_c is
/// <w, J e_c>, one seeded pass per input coordinate.
struct DualAsPullback {
  template <class F, class T>
  PullbackClosure<T> operator()(const F& f, const Args<T>& xs) const {
    return {[f, xs](const Value<T>& w) {
              Args<T> out;
              Args<T> seed;
              for (const auto& x : xs) seed.push_back(Value<T>::zeros(x.shape()));
              for (std::size_t i = 0; i < xs.size(); ++i) {
                Value<T> g = Value<T>::zeros(xs[i].shape());
                for (std::size_t c = 0; c < xs[i].size(); ++c) {
                  seed[i][c] = T(1);
                  const Value<T> column = tangent_part(evaluate(f, lift_dual<T>(xs, &seed)));
                  seed[i][c] = T(0);
                  if (column.shape() != w.shape()) throw ShapeError("dual_as_pullback", "cotangent shape mismatch");
                  T acc(0);
                  for (std::size_t r = 0; r < column.size(); ++r) acc = acc + w[r] * column[r];
                  g[c] = acc;
                }
                out.push_back(std::move(g));
              }
              return out;
            },
            std::nullopt};
  }
};

/// One mechanism registered three ways.
struct DualThreeWays {
  Registry registry;
  Backend<DualAsJacobian, NoPrimal> as_jacobian = register_backend(
      registry, BackendDescriptor{"dual-jacobian", Mode::ForwardMode, PrimitiveKind::Jacobian, false}, DualAsJacobian{});
  Backend<DualPrimitive, NoPrimal> as_pushforward = register_backend(
      registry, BackendDescriptor{"dual-pushforward", Mode::ForwardMode, PrimitiveKind::Pushforward, false},
      DualPrimitive{});
  Backend<DualAsPullback, NoPrimal> as_pullback = register_backend(
      registry, BackendDescriptor{"dual-pullback", Mode::ForwardMode, PrimitiveKind::Pullback, false}, DualAsPullback{});
};

/// Seeded generator for property tests.
struct Gen {
  std::mt19937_64 rng;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1p-53); }

  std::size_t size(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); }

  Value<double> vector(std::size_t n, double lo = -1, double hi = 1) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return Value<double>::vector(std::move(v));
  }

  Value<double> like(const Shape& s, double lo = -1, double hi = 1) {
    if (s.is_scalar()) return Value<double>(uniform(lo, hi));
    return vector(s.length, lo, hi);
  }
};

/// Central-difference Jacobian with a fixed step, evaluated on plain doubles.
template <class F>
JacobianResult<double> central_difference_jacobian(const F& f, const Args<double>& xs, double h = 1e-5) {
  JacobianResult<double> J;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Matrix<double> block;
    for (std::size_t c = 0; c < xs[i].size(); ++c) {
      Args<double> up = xs;
      Args<double> down = xs;
      up[i][c] += h;
      down[i][c] -= h;
      const Value<double> fu = evaluate(f, up);
      const Value<double> fd = evaluate(f, down);
      if (c == 0) block = Matrix<double>(fu.size(), xs[i].size());
      for (std::size_t r = 0; r < fu.size(); ++r) block(r, c) = (fu[r] - fd[r]) / (2 * h);
    }
    J.push_back(std::move(block));
  }
  return J;
}

/// Second-order central differences of a scalar function of one vector.
template <class F>
Matrix<double> second_difference_hessian(const F& f, const Value<double>& x, double h = 1e-4) {
  const std::size_t n = x.size();
  Matrix<double> H(n, n);
  auto at = [&](std::size_t i, double si, std::size_t j, double sj) {
    Value<double> y = x;
    y[i] += si * h;
    y[j] += sj * h;
    return evaluate(f, Args<double>{y})[0];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      H(i, j) = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4 * h * h);
    }
  }
  return H;
}

/// Exact rational number over 64-bit integers, enough for small stencils.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Fraction(std::int64_t n = 0, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  friend Fraction operator+(Fraction a, Fraction b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Fraction operator*(Fraction a, Fraction b) { return {a.num * b.num, a.den * b.den}; }
  friend Fraction operator/(Fraction a, Fraction b) { return {a.num * b.den, a.den * b.num}; }
  friend bool operator==(Fraction a, Fraction b) { return a.num == b.num && a.den == b.den; }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// First-derivative weights at 0 as L_j'(0) of the Lagrange basis on the
/// given nodes, in exact arithmetic.
inline std::vector<Fraction> lagrange_first_derivative_weights(const std::vector<int>& nodes) {
  std::vector<Fraction> w;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    Fraction total(0);
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      if (m == j) continue;
      Fraction term(1, nodes[j] - nodes[m]);
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (k == j || k == m) continue;
        term = term * Fraction(-nodes[k], nodes[j] - nodes[k]);
      }
      total = total + term;
    }
    w.push_back(total);
  }
  return w;
}

/// Least-squares solution of a 3x2 system through the 2x2 normal equations,
/// by Cramer's rule.
inline std::vector<double> normal_equation_solution(const double A[3][2], const double b[3]) {
  double m[2][2] = {{0, 0}, {0, 0}};
  double r[2] = {0, 0};
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 2; ++i) {
      r[i] += A[k][i] * b[k];
      for (int j = 0; j < 2; ++j) m[i][j] += A[k][i] * A[k][j];
    }
  }
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return {(r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - r[0] * m[1][0]) / det};
}

/// Distance in representable doubles between two finite values.
inline std::int64_t ulp_distance(double a, double b) {
  auto ordered = [](double x) {
    std::int64_t i;
    std::memcpy(&i, &x, sizeof i);
    return i < 0 ? std::numeric_limits<std::int64_t>::min() - i : i;
  };
  const std::int64_t d = ordered(a) - ordered(b);
  return d < 0 ? -d : d;
}

inline double max_abs_difference(const Matrix<double>& a, const Matrix<double>& b) {
  double worst = 0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b(r, c)));
  }
  return worst;
}

inline double max_abs_difference(const JacobianResult<double>& a, const JacobianResult<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, max_abs_difference(a[i], b[i]));
  return worst;
}

inline double asymmetry(const Matrix<double>& H) {
  double worst = 0;
  for (std::size_t r = 0; r < H.rows(); ++r) {
    for (std::size_t c = 0; c < H.cols(); ++c) worst = std::max(worst, std::abs(H(r, c) - H(c, r)));
  }
  return worst;
}

template <class T>
double inner(const Value<T>& a, const Value<T>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace adf::test

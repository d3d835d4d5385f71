#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "adf/adf.hpp"

namespace adf::cli {

/// Uniform double in [0, 1) from the top 53 bits of one draw, so the stream
/// is identical on every standard library.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

/// f(v) = v1 + v2 + v3 + v4.
struct SumProblem {
  static constexpr std::string_view name = "sum";
  static constexpr bool vector_output = false;

  Args<double> point() const { return {vec({1.0, 2.0, 3.0, 4.0})}; }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return sum(xs[0]);
  }

  Matrix<double> packed_hessian(const std::vector<double>& z) const { return Matrix<double>(z.size(), z.size()); }
};

/// f(v, w) = v . w over R^3 x R^3.
struct DotProblem {
  static constexpr std::string_view name = "dot";
  static constexpr bool vector_output = false;

  Args<double> point() const { return {vec({1.0, 2.0, 3.0}), vec({4.0, 5.0, 6.0})}; }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return dot(xs[0], xs[1]);
  }

  Matrix<double> packed_hessian(const std::vector<double>&) const {
    Matrix<double> H(6, 6);
    for (std::size_t i = 0; i < 3; ++i) H(i, i + 3) = H(i + 3, i) = 1;
    return H;
  }
};

/// f(x, y) = x y + sin x on two scalar arguments.
struct ProductSinProblem {
  static constexpr std::string_view name = "product-sin";
  static constexpr bool vector_output = false;

  Args<double> point() const { return args(0.5, 2.0); }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    using std::sin;
    return xs[0][0] * xs[1][0] + sin(xs[0][0]);
  }

  Matrix<double> packed_hessian(const std::vector<double>& z) const {
    Matrix<double> H(2, 2);
    H(0, 0) = -std::sin(z[0]);
    H(0, 1) = H(1, 0) = 1;
    return H;
  }
};

/// Rosenbrock residuals (1 - x1, 10 (x2 - x1^2)).
struct RosenbrockProblem {
  static constexpr std::string_view name = "rosenbrock";
  static constexpr bool vector_output = true;

  Args<double> point() const { return {vec({-1.2, 1.0})}; }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    const auto& v = xs[0];
    return vec<S>({S(1) - v[0], S(10) * (v[1] - v[0] * v[0])});
  }

  /// Hessian of 1/2 |r|^2.
  Matrix<double> packed_hessian(const std::vector<double>& z) const {
    Matrix<double> H(2, 2);
    H(0, 0) = 1 - 200 * z[1] + 600 * z[0] * z[0];
    H(0, 1) = H(1, 0) = -200 * z[0];
    H(1, 1) = 100;
    return H;
  }
};

/// Unit circle and diagonal, (v1^2 + v2^2 - 1, v1 - v2).
struct CircleDiagonalProblem {
  static constexpr std::string_view name = "circle-diagonal";
  static constexpr bool vector_output = true;

  Args<double> point() const { return {vec({1.0, 0.5})}; }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    const auto& v = xs[0];
    return vec<S>({v[0] * v[0] + v[1] * v[1] - S(1), v[0] - v[1]});
  }

  /// Hessian of 1/2 |r|^2: grad a grad a^T + 2 a I + grad b grad b^T.
  Matrix<double> packed_hessian(const std::vector<double>& z) const {
    const double a = z[0] * z[0] + z[1] * z[1] - 1;
    const double ga[2] = {2 * z[0], 2 * z[1]};
    const double gb[2] = {1, -1};
    Matrix<double> H(2, 2);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < 2; ++c) H(r, c) = ga[r] * ga[c] + gb[r] * gb[c] + (r == c ? 2 * a : 0);
    }
    return H;
  }
};

/// f_i(x) = tanh(a_i . x) + c_i x_k^2 with k = i mod n, coefficients drawn
/// from a seeded generator: a_ij in [-1, 1), c_i in [-1/2, 1/2).
struct RandomSmoothMap {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::vector<double>> a;
  std::vector<double> c;

  RandomSmoothMap(std::size_t inputs, std::size_t outputs, std::uint64_t seed) : n(inputs), m(outputs) {
    std::mt19937_64 rng(seed);
    a.assign(m, std::vector<double>(n));
    c.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) a[i][j] = uniform(rng, -1, 1);
      c[i] = uniform(rng, -0.5, 0.5);
    }
  }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    using std::tanh;
    const auto& x = xs[0];
    std::vector<S> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      S z(0);
      for (std::size_t j = 0; j < n; ++j) z = z + S(a[i][j]) * x[j];
      const S& xk = x[i % n];
      out.push_back(tanh(z) + S(c[i]) * xk * xk);
    }
    return Value<S>::vector(std::move(out));
  }

  /// Hessian of 1/2 |f|^2: sum_i grad f_i grad f_i^T + f_i hess f_i.
  Matrix<double> objective_hessian(const std::vector<double>& x) const {
    Matrix<double> H(n, n);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = i % n;
      double z = 0;
      for (std::size_t j = 0; j < n; ++j) z += a[i][j] * x[j];
      const double t = std::tanh(z);
      const double s = 1 - t * t;
      const double fi = t + c[i] * x[k] * x[k];
      std::vector<double> g(n);
      for (std::size_t j = 0; j < n; ++j) g[j] = s * a[i][j];
      g[k] += 2 * c[i] * x[k];
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t q = 0; q < n; ++q) {
          H(r, q) += g[r] * g[q] + fi * (-2 * t * s * a[i][r] * a[i][q] + (r == k && q == k ? 2 * c[i] : 0));
        }
      }
    }
    return H;
  }
};

/// The random map at a fixed size and seed, R^4 -> R^6.
struct RandomSmoothProblem {
  static constexpr std::string_view name = "random-smooth";
  static constexpr bool vector_output = true;
  static constexpr std::uint64_t coefficient_seed = 20240611;

  RandomSmoothMap map{4, 6, coefficient_seed};

  Args<double> point() const { return {vec({0.3, -0.2, 0.5, 0.1})}; }

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return map(xs);
  }

  Matrix<double> packed_hessian(const std::vector<double>& z) const { return map.objective_hessian(z); }
};

using DiffProblems = std::tuple<SumProblem, DotProblem, ProductSinProblem, RosenbrockProblem, CircleDiagonalProblem,
                                RandomSmoothProblem>;

template <class V>
void for_each_problem(V&& visit) {
  std::apply([&](auto... p) { (visit(p), ...); }, DiffProblems{});
}

inline std::vector<std::string_view> problem_names() {
  std::vector<std::string_view> out;
  for_each_problem([&](const auto& p) { out.push_back(p.name); });
  return out;
}

/// Scalar function differentiated by gradient: the problem itself when it is
/// scalar-valued, else 1/2 |f|^2.
template <class P>
struct ScalarObjective {
  P problem;

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    if constexpr (P::vector_output) {
      const Value<S> y = evaluate(problem, xs);
      S acc(0);
      for (const auto& yi : y) acc = acc + yi * yi;
      return S(0.5) * acc;
    } else {
      return evaluate(problem, xs);
    }
  }
};

/// Concatenation of all arguments into one vector.
template <class T>
Value<T> pack(const Args<T>& xs) {
  std::vector<T> out;
  for (const auto& x : xs) out.insert(out.end(), x.begin(), x.end());
  return Value<T>::vector(std::move(out));
}

template <class S>
Args<S> unpack(const Value<S>& z, const std::vector<Shape>& shapes) {
  Args<S> out;
  std::size_t offset = 0;
  for (const auto& s : shapes) {
    if (s.is_scalar()) {
      out.emplace_back(z[offset]);
    } else {
      out.push_back(Value<S>::vector(std::vector<S>(z.begin() + offset, z.begin() + offset + s.length)));
    }
    offset += s.length;
  }
  return out;
}

/// The scalar objective as a function of the single packed vector, which is
/// what hessian differentiates.
template <class P>
struct PackedObjective {
  P problem;
  std::vector<Shape> shapes;

  template <class S>
  Value<S> operator()(const Args<S>& z) const {
    return ScalarObjective<P>{problem}(unpack(z[0], shapes));
  }
};

template <class P>
PackedObjective<P> packed_objective(const P& problem) {
  return {problem, shapes_of(problem.point())};
}

/// `xs` shifted by independent draws from [-1/4, 1/4).
inline Args<double> perturbed(Args<double> xs, std::mt19937_64& rng) {
  for (auto& x : xs) {
    std::vector<double> data(x.begin(), x.end());
    for (auto& v : data) v += uniform(rng, -0.25, 0.25);
    x = x.is_scalar() ? Value<double>(data.front()) : Value<double>::vector(std::move(data));
  }
  return xs;
}

/// Least-squares problems for the Gauss-Newton demo. Residuals take (x, p).
struct LinearResidual {
  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    const auto& x = xs[0];
    const auto& b = xs[1];
    return vec<S>({x[0] - b[0], x[1] - b[1], x[0] + x[1] - b[2]});
  }
};

struct RosenbrockResidual {
  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return RosenbrockProblem{}(Args<S>{xs[0]});
  }
};

struct CircleDiagonalResidual {
  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return CircleDiagonalProblem{}(Args<S>{xs[0]});
  }
};

inline auto linear_problem() {
  return make_residual_problem(LinearResidual{}, vec({1.0, 2.0, 3.0}), vec({0.0, 0.0}));
}

inline auto rosenbrock_problem() {
  return make_residual_problem(RosenbrockResidual{}, Value<double>(0.0), vec({-1.2, 1.0}));
}

inline auto circle_diagonal_problem() {
  return make_residual_problem(CircleDiagonalResidual{}, Value<double>(0.0), vec({1.0, 0.5}));
}

inline const std::vector<std::string_view>& residual_problem_names() {
  static const std::vector<std::string_view> names{"rosenbrock", "linear", "circle-diagonal"};
  return names;
}

template <class V>
decltype(auto) with_residual_problem(std::string_view name, V&& visit) {
  if (name == "linear") return visit(linear_problem());
  if (name == "circle-diagonal") return visit(circle_diagonal_problem());
  return visit(rosenbrock_problem());
}

/// x^2 - 4 on a scalar.
struct SquareRootProblem {
  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return xs[0][0] * xs[0][0] - S(4);
  }
};

inline const std::vector<std::string_view>& root_problem_names() {
  static const std::vector<std::string_view> names{"circle-diagonal", "rosenbrock", "square-root"};
  return names;
}

template <class V>
decltype(auto) with_root_problem(std::string_view name, V&& visit) {
  if (name == "rosenbrock") return visit(RosenbrockProblem{}, vec({-1.2, 1.0}));
  if (name == "square-root") return visit(SquareRootProblem{}, Value<double>(3.0));
  return visit(CircleDiagonalProblem{}, vec({1.0, 0.5}));
}

}  // namespace adf::cli

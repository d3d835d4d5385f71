#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "adf/core/errors.hpp"

namespace adf {

template <class U>
concept Arithmetic = std::is_arithmetic_v<U>;

/// Plain floating-point value of any carrier. Dual and tape carriers provide
/// their own overload through argument-dependent lookup.
template <Arithmetic U>
constexpr double value_of(U x) noexcept {
  return static_cast<double>(x);
}

template <class T>
bool is_finite(const T& x) {
  return std::isfinite(value_of(x));
}

enum class ValueKind { Scalar, Vector };

struct Shape {
  ValueKind kind = ValueKind::Scalar;
  std::size_t length = 1;

  static Shape scalar() { return {ValueKind::Scalar, 1}; }
  static Shape vector(std::size_t n) { return {ValueKind::Vector, n}; }

  bool is_scalar() const { return kind == ValueKind::Scalar; }

  std::string to_string() const {
    return is_scalar() ? std::string("scalar") : "vector[" + std::to_string(length) + "]";
  }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// A scalar or a dense 1-D array over the carrier type `T`.
///
/// `T` is `double` for user-facing calls and a dual or tape carrier while a
/// backend traces a function.
template <class T>
class Value {
 public:
  using scalar_type = T;

  Value() : Value(T(0)) {}
  Value(T x) : kind_(ValueKind::Scalar), data_{std::move(x)} {}
  template <Arithmetic U>
    requires(!std::same_as<U, T>)
  Value(U x) : Value(T(x)) {}

  static Value vector(std::vector<T> data) {
    Value v;
    v.kind_ = ValueKind::Vector;
    v.data_ = std::move(data);
    return v;
  }

  static Value zeros(const Shape& shape) {
    if (shape.is_scalar()) return Value(T(0));
    return vector(std::vector<T>(shape.length, T(0)));
  }

  /// Standard basis element `index` of the given shape.
  static Value basis(const Shape& shape, std::size_t index) {
    Value v = zeros(shape);
    v.data_.at(index) = T(1);
    return v;
  }

  ValueKind kind() const { return kind_; }
  bool is_scalar() const { return kind_ == ValueKind::Scalar; }
  std::size_t size() const { return data_.size(); }
  Shape shape() const { return {kind_, data_.size()}; }

  const T& operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  const T& at(std::size_t i) const {
    if (i >= data_.size()) throw ShapeError("Value::at", "index " + std::to_string(i) + " out of range for " + shape().to_string());
    return data_[i];
  }

  const T& scalar() const {
    if (!is_scalar()) throw ShapeError("Value::scalar", "expected a scalar, got " + shape().to_string());
    return data_.front();
  }

  std::span<const T> span() const { return data_; }
  const std::vector<T>& data() const { return data_; }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  ValueKind kind_ = ValueKind::Scalar;
  std::vector<T> data_;
};

/// d/dx tanh(x) as 4e / (1 + e)^2 with e = exp(-2|x|). Unlike 1 - tanh(x)^2
/// it keeps full relative accuracy for large |x|, and it only uses operations
/// every carrier supports.
template <class T>
T tanh_derivative(const T& x) {
  using std::abs;
  using std::exp;
  const T e = exp(T(-2) * abs(x));
  const T d = T(1) + e;
  return T(4) * e / (d * d);
}

/// Ordered positional arguments of a differentiable function.
template <class T>
using Args = std::vector<Value<T>>;

namespace detail {
template <class V>
struct scalar_of {
  using type = V;
};
template <class T>
struct scalar_of<Value<T>> {
  using type = T;
};
}  // namespace detail

/// Carrier type of an argument list, e.g. `carrier_t<decltype(xs)>` inside a
/// generic function body.
template <class A>
using carrier_t = typename std::remove_cvref_t<A>::value_type::scalar_type;

template <class T>
Value<T> scalar(T x) {
  return Value<T>(std::move(x));
}

template <class T>
Value<T> vec(std::initializer_list<T> xs) {
  return Value<T>::vector(std::vector<T>(xs));
}

template <class T>
Value<T> vec(std::vector<T> xs) {
  return Value<T>::vector(std::move(xs));
}

/// Builds an argument list; plain scalars become scalar arguments.
template <class First, class... Rest>
auto args(const First& first, const Rest&... rest) {
  using T = typename detail::scalar_of<First>::type;
  return Args<T>{Value<T>(first), Value<T>(rest)...};
}

template <class T>
T sum(const Value<T>& v) {
  T acc(0);
  for (const auto& x : v) acc = acc + x;
  return acc;
}

template <class T>
T dot(const Value<T>& a, const Value<T>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot", "length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  T acc(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

/// Calls `f` on `xs`, accepting either a `Value<S>` or a bare scalar result.
template <class F, class S>
Value<S> evaluate(const F& f, const Args<S>& xs) {
  using R = std::remove_cvref_t<std::invoke_result_t<const F&, const Args<S>&>>;
  if constexpr (std::same_as<R, Value<S>>) {
    return f(xs);
  } else {
    static_assert(std::is_constructible_v<Value<S>, R>, "a differentiable function must return a single Value or scalar; "
                  "concatenate multiple outputs into one vector");
    return Value<S>(f(xs));
  }
}

template <class T>
std::vector<Shape> shapes_of(const Args<T>& xs) {
  std::vector<Shape> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.shape());
  return out;
}

/// Throws ShapeError unless `xs` matches `expected` argument by argument.
template <class T>
void check_shapes(const std::string& op, const std::string& what, const Args<T>& xs,
                  const std::vector<Shape>& expected) {
  if (xs.size() != expected.size()) {
    throw ShapeError(op, what + " has " + std::to_string(xs.size()) + " entries, expected " +
                             std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].shape() != expected[i]) {
      throw ShapeError(op, what + " entry " + std::to_string(i) + " is " + xs[i].shape().to_string() + ", expected " +
                               expected[i].to_string());
    }
  }
}

/// Dense row-major matrix over a carrier type.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const T> row(std::size_t r) const { return std::span<const T>(data_).subspan(r * cols_, cols_); }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// One (output length x argument length) block per positional argument.
template <class T>
using JacobianResult = std::vector<Matrix<T>>;

}  // namespace adf

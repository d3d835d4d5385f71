#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "adf/core/primitives.hpp"
#include "adf/core/value.hpp"

namespace adf {

/// Forward-mode carrier: a primal value and one tangent.
///
/// `T` may itself be a `Dual` or a tape variable, so nesting levels are
/// distinct types. An inner derivative only ever reads the tangent of its own
/// level, which rules out perturbation confusion.
template <class T>
struct Dual {
  using value_type = T;

  T primal;
  T tangent;

  Dual() : primal(0), tangent(0) {}
  Dual(T p) : primal(std::move(p)), tangent(0) {}
  template <Arithmetic U>
    requires(!std::same_as<U, T>)
  Dual(U p) : primal(p), tangent(0) {}
  Dual(T p, T t) : primal(std::move(p)), tangent(std::move(t)) {}

  friend double value_of(const Dual& a) { return value_of(a.primal); }

  friend Dual operator-(const Dual& a) { return {-a.primal, -a.tangent}; }
  friend Dual operator+(const Dual& a) { return a; }

  friend Dual operator+(const Dual& a, const Dual& b) { return {a.primal + b.primal, a.tangent + b.tangent}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.primal - b.primal, a.tangent - b.tangent}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {a.primal * b.primal, a.tangent * b.primal + a.primal * b.tangent};
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    T q = a.primal / b.primal;
    return {q, (a.tangent - q * b.tangent) / b.primal};
  }

  Dual& operator+=(const Dual& b) { return *this = *this + b; }
  Dual& operator-=(const Dual& b) { return *this = *this - b; }
  Dual& operator*=(const Dual& b) { return *this = *this * b; }
  Dual& operator/=(const Dual& b) { return *this = *this / b; }

  // Comparisons look at the primal only; they exist for branching.
  friend bool operator==(const Dual& a, const Dual& b) { return a.primal == b.primal; }
  friend bool operator<(const Dual& a, const Dual& b) { return a.primal < b.primal; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.primal <= b.primal; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.primal > b.primal; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.primal >= b.primal; }

  friend Dual exp(const Dual& a) {
    using std::exp;
    T e = exp(a.primal);
    return {e, e * a.tangent};
  }
  friend Dual log(const Dual& a) {
    using std::log;
    return {log(a.primal), a.tangent / a.primal};
  }
  friend Dual sin(const Dual& a) {
    using std::cos;
    using std::sin;
    return {sin(a.primal), cos(a.primal) * a.tangent};
  }
  friend Dual cos(const Dual& a) {
    using std::cos;
    using std::sin;
    return {cos(a.primal), -sin(a.primal) * a.tangent};
  }
  friend Dual tanh(const Dual& a) {
    using std::tanh;
    return {tanh(a.primal), tanh_derivative(a.primal) * a.tangent};
  }
  friend Dual sqrt(const Dual& a) {
    using std::sqrt;
    T s = sqrt(a.primal);
    return {s, a.tangent / (T(2) * s)};
  }
  // abs'(0) is taken to be 0.
  friend Dual abs(const Dual& a) {
    using std::abs;
    const double v = value_of(a.primal);
    const double sign = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    return {abs(a.primal), sign * a.tangent};
  }
  friend Dual pow(const Dual& a, const Dual& b) {
    using std::log;
    using std::pow;
    T p = pow(a.primal, b.primal);
    return {p, b.primal * pow(a.primal, b.primal - T(1)) * a.tangent + p * log(a.primal) * b.tangent};
  }
  template <Arithmetic U>
  friend Dual pow(const Dual& a, U n) {
    using std::pow;
    const double e = static_cast<double>(n);
    return {pow(a.primal, e), e * pow(a.primal, e - 1.0) * a.tangent};
  }
  template <Arithmetic U>
  friend Dual pow(U c, const Dual& b) {
    using std::pow;
    const double base = static_cast<double>(c);
    T p = pow(base, b.primal);
    return {p, p * std::log(base) * b.tangent};
  }

  // Outside the supported operation set.
  friend Dual atan(const Dual&) { unsupported("atan"); }
  friend Dual asin(const Dual&) { unsupported("asin"); }
  friend Dual acos(const Dual&) { unsupported("acos"); }
  friend Dual sinh(const Dual&) { unsupported("sinh"); }
  friend Dual cosh(const Dual&) { unsupported("cosh"); }
  friend Dual erf(const Dual&) { unsupported("erf"); }

 private:
  [[noreturn]] static void unsupported(const char* op) {
    throw ConfigError("dual", std::string("unsupported scalar operation '") + op + "'");
  }
};

/// Lifts `xs` to dual carriers whose tangents are taken from `seed` (zero
/// when `seed` is null).
template <class T>
Args<Dual<T>> lift_dual(const Args<T>& xs, const Args<T>* seed) {
  Args<Dual<T>> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<Dual<T>> data;
    data.reserve(xs[i].size());
    for (std::size_t k = 0; k < xs[i].size(); ++k) {
      data.emplace_back(xs[i][k], seed ? (*seed)[i][k] : T(0));
    }
    if (xs[i].is_scalar()) {
      out.emplace_back(std::move(data.front()));
    } else {
      out.push_back(Value<Dual<T>>::vector(std::move(data)));
    }
  }
  return out;
}

template <class T>
Value<T> primal_part(const Value<Dual<T>>& v) {
  if (v.is_scalar()) return Value<T>(v[0].primal);
  std::vector<T> out;
  out.reserve(v.size());
  for (const auto& d : v) out.push_back(d.primal);
  return Value<T>::vector(std::move(out));
}

template <class T>
Value<T> tangent_part(const Value<Dual<T>>& v) {
  if (v.is_scalar()) return Value<T>(v[0].tangent);
  std::vector<T> out;
  out.reserve(v.size());
  for (const auto& d : v) out.push_back(d.tangent);
  return Value<T>::vector(std::move(out));
}

/// Output of `f` at `xs` recovered from a zero-tangent dual evaluation.
template <class F, class T>
Value<T> dual_primal(const F& f, const Args<T>& xs) {
  return primal_part(evaluate(f, lift_dual<T>(xs, nullptr)));
}

/// Forward-mode pushforward: each call evaluates `f` once on dual carriers
/// seeded with the given tangents. Construction runs one zero-tangent pass
/// that provides the primal.
template <class F, class T>
PushforwardClosure<T> dual_pushforward(const F& f, const Args<T>& xs) {
  auto shapes = shapes_of(xs);
  Value<T> primal = dual_primal(f, xs);
  return {[f, xs, shapes = std::move(shapes)](const Args<T>& seed) {
            check_shapes("dual_pushforward", "tangent seed", seed, shapes);
            return tangent_part(evaluate(f, lift_dual<T>(xs, &seed)));
          },
          std::move(primal)};
}

}  // namespace adf

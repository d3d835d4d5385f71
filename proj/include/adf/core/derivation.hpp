#pragma once

#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "adf/core/backend.hpp"
#include "adf/core/errors.hpp"
#include "adf/core/primitives.hpp"
#include "adf/core/value.hpp"

namespace adf {

/// A differentiable function with declared argument and output shapes. The
/// engine checks arguments against the declaration and skips the
/// shape-discovery evaluation.
template <class F>
struct DeclaredFunction {
  F fn;
  std::vector<Shape> inputs;
  Shape output;

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return evaluate(fn, xs);
  }
};

template <class F>
DeclaredFunction<F> declare_shapes(F f, std::vector<Shape> inputs, Shape output) {
  return {std::move(f), std::move(inputs), output};
}

template <class T>
struct ValueAndDerivative {
  Value<T> value;
  std::vector<T> derivative;
};

template <class T>
struct ValueAndGradient {
  Value<T> value;
  std::vector<Value<T>> gradient;
};

template <class T>
struct ValueAndJacobian {
  Value<T> value;
  JacobianResult<T> jacobian;
};

template <class T>
struct ValueAndHessian {
  Value<T> value;
  Matrix<T> hessian;
};

template <class T>
struct ValueGradientAndHessian {
  Value<T> value;
  std::vector<Value<T>> gradient;
  Matrix<T> hessian;
};

namespace detail {

template <class F>
struct is_declared : std::false_type {};
template <class F>
struct is_declared<DeclaredFunction<F>> : std::true_type {};

template <class F>
std::optional<Shape> declared_output(const F& f) {
  if constexpr (is_declared<F>::value) {
    return f.output;
  } else {
    return std::nullopt;
  }
}

template <class F, class T>
void check_arguments(const std::string& op, const F& f, const Args<T>& xs) {
  if (xs.empty()) throw ShapeError(op, "at least one argument is required");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() == 0) throw ShapeError(op, "argument " + std::to_string(i) + " has zero length");
    if constexpr (std::is_arithmetic_v<T>) {
      for (const auto& v : xs[i]) {
        if (!std::isfinite(v)) throw NumericalError(op, "argument " + std::to_string(i) + " has a non-finite entry");
      }
    }
  }
  if constexpr (is_declared<F>::value) check_shapes(op, "argument list", xs, f.inputs);
}

template <AnyBackend B, class F, class T>
Value<T> counted_evaluate(const B& ab, const F& f, const Args<T>& xs) {
  if constexpr (HigherOrder<B>) {
    return counted_evaluate(ab.inner(), f, xs);
  } else {
    ab.counters().function_evals++;
    return evaluate(f, xs);
  }
}

template <class P, class Q, class F, class T>
constexpr bool can_lift = std::is_invocable_v<const P&, const F&, const Args<T>&>;

template <class P, class Q>
[[noreturn]] void cannot_lift(const std::string& op, const Backend<P, Q>& ab) {
  throw ConfigError(op, "backend '" + ab.name() + "' cannot lift the carrier scalars it was given");
}

/// Output shape implied by a closure's primal, else by a declaration.
template <class T, class F>
std::optional<Shape> known_output(const std::optional<Value<T>>& primal, const F& f) {
  if (primal) return primal->shape();
  return declared_output(f);
}

template <class P, class Q, class F, class T>
PushforwardClosure<T> native_pushforward(const std::string& op, const Backend<P, Q>& ab, const F& f, const Args<T>& xs) {
  if constexpr (!can_lift<P, Q, F, T>) {
    cannot_lift(op, ab);
  } else {
    ab.counters().primitive_builds++;
    PushforwardClosure<T> raw = ab.primitive()(f, xs);
    auto counters = ab.counters_ptr();
    return {[apply = std::move(raw.apply), counters, inputs = shapes_of(xs)](const Args<T>& seed) {
              check_shapes("pushforward_function", "tangent seed", seed, inputs);
              counters->pushforward_calls++;
              return apply(seed);
            },
            std::move(raw.primal)};
  }
}

template <class P, class Q, class F, class T>
PullbackClosure<T> native_pullback(const std::string& op, const Backend<P, Q>& ab, const F& f, const Args<T>& xs) {
  if constexpr (!can_lift<P, Q, F, T>) {
    cannot_lift(op, ab);
  } else {
    ab.counters().primitive_builds++;
    PullbackClosure<T> raw = ab.primitive()(f, xs);
    auto counters = ab.counters_ptr();
    const std::optional<Shape> output = known_output(raw.primal, f);
    return {[apply = std::move(raw.apply), counters, output](const Value<T>& w) {
              if (output && w.shape() != *output) {
                throw ShapeError("pullback_function",
                                 "cotangent is " + w.shape().to_string() + ", output is " + output->to_string());
              }
              counters->pullback_calls++;
              return apply(w);
            },
            std::move(raw.primal)};
  }
}

template <class P, class Q, class F, class T>
JacobianResult<T> native_jacobian(const std::string& op, const Backend<P, Q>& ab, const F& f, const Args<T>& xs) {
  if constexpr (!can_lift<P, Q, F, T>) {
    cannot_lift(op, ab);
  } else {
    ab.counters().jacobian_calls++;
    JacobianResult<T> J = ab.primitive()(f, xs);
    if (J.size() != xs.size()) {
      throw ShapeError(op, "native jacobian returned " + std::to_string(J.size()) + " blocks for " +
                               std::to_string(xs.size()) + " arguments");
    }
    for (std::size_t i = 0; i < J.size(); ++i) {
      if (J[i].cols() != xs[i].size() || J[i].rows() != J.front().rows()) {
        throw ShapeError(op, "native jacobian block " + std::to_string(i) + " has inconsistent dimensions");
      }
    }
    return J;
  }
}

template <class T>
std::pair<JacobianResult<T>, Shape> jacobian_via_pushforward(const PushforwardClosure<T>& pf,
                                                             const std::vector<Shape>& inputs,
                                                             std::optional<Shape> output) {
  const std::string op = "derive_jacobian_from_pushforward";
  Args<T> seed;
  for (const auto& s : inputs) seed.push_back(Value<T>::zeros(s));

  JacobianResult<T> J;
  J.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Matrix<T> block;
    for (std::size_t c = 0; c < inputs[i].length; ++c) {
      seed[i] = Value<T>::basis(inputs[i], c);
      const Value<T> y = pf(seed);
      if (!output) output = y.shape();
      if (y.shape() != *output) {
        throw ShapeError(op, "closure output is " + y.shape().to_string() + ", expected " + output->to_string());
      }
      if (c == 0) block = Matrix<T>(output->length, inputs[i].length);
      for (std::size_t r = 0; r < y.size(); ++r) block(r, c) = y[r];
    }
    seed[i] = Value<T>::zeros(inputs[i]);
    J.push_back(std::move(block));
  }
  return {std::move(J), *output};
}

}  // namespace detail

/// Materializes the Jacobian from a pushforward closure with one standard
/// basis seed per input coordinate (sum of argument lengths calls).
template <class T>
JacobianResult<T> derive_jacobian_from_pushforward(const PushforwardClosure<T>& pf, const std::vector<Shape>& inputs,
                                                   std::optional<Shape> output = std::nullopt) {
  return detail::jacobian_via_pushforward(pf, inputs, output).first;
}

/// Materializes the Jacobian from a pullback closure with one standard basis
/// cotangent per output coordinate (output length calls).
template <class T>
JacobianResult<T> derive_jacobian_from_pullback(const PullbackClosure<T>& pb, const std::vector<Shape>& inputs,
                                                const Shape& output) {
  const std::string op = "derive_jacobian_from_pullback";
  JacobianResult<T> J;
  J.reserve(inputs.size());
  for (const auto& s : inputs) J.emplace_back(output.length, s.length);

  for (std::size_t r = 0; r < output.length; ++r) {
    const Args<T> g = pb(Value<T>::basis(output, r));
    if (g.size() != inputs.size()) {
      throw ShapeError(op, "closure returned " + std::to_string(g.size()) + " cotangents for " +
                               std::to_string(inputs.size()) + " arguments");
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (g[i].shape() != inputs[i]) {
        throw ShapeError(op, "cotangent " + std::to_string(i) + " is " + g[i].shape().to_string() + ", expected " +
                                 inputs[i].to_string());
      }
      for (std::size_t c = 0; c < inputs[i].length; ++c) J[i](r, c) = g[i][c];
    }
  }
  return J;
}

namespace detail {

/// Jacobian plus whatever the native primitive learned about the output.
template <class T>
struct Linearization {
  JacobianResult<T> jacobian;
  std::optional<Value<T>> primal;
  std::optional<Shape> output;
};

template <AnyBackend B, class F, class T>
Linearization<T> linearize(const std::string& op, const B& ab, const F& f, const Args<T>& xs) {
  if constexpr (HigherOrder<B>) {
    return linearize(op, ab.inner(), f, xs);
  } else {
    constexpr auto kind = std::remove_cvref_t<B>::primitive_kind;
    static_assert(kind.has_value(), "backend primitive has an unrecognized signature");
    const auto inputs = shapes_of(xs);
    Linearization<T> lin;
    if constexpr (*kind == PrimitiveKind::Jacobian) {
      lin.jacobian = native_jacobian(op, ab, f, xs);
      lin.output = declared_output(f);
      if (lin.output && lin.output->length != lin.jacobian.front().rows()) {
        throw ShapeError(op, "function output differs from its declared shape " + lin.output->to_string());
      }
    } else if constexpr (*kind == PrimitiveKind::Pushforward) {
      const auto pf = native_pushforward(op, ab, f, xs);
      lin.primal = pf.primal;
      auto [J, observed] = jacobian_via_pushforward(pf, inputs, known_output(pf.primal, f));
      lin.jacobian = std::move(J);
      lin.output = observed;
    } else {
      const auto pb = native_pullback(op, ab, f, xs);
      lin.primal = pb.primal;
      lin.output = known_output(pb.primal, f);
      if (!lin.output) lin.output = counted_evaluate(ab, f, xs).shape();
      lin.jacobian = derive_jacobian_from_pullback(pb, inputs, *lin.output);
    }
    if (auto declared = declared_output(f); declared && lin.output != declared) {
      throw ShapeError(op, "function output is " + lin.output->to_string() + ", declared " + declared->to_string());
    }
    return lin;
  }
}

template <AnyBackend B, class F, class T>
Value<T> primal_or_evaluate(const B& ab, const F& f, const Args<T>& xs, const Linearization<T>& lin) {
  if (lin.primal) return *lin.primal;
  return counted_evaluate(ab, f, xs);
}

template <AnyBackend B, class F, class T>
Shape output_shape(const B& ab, const F& f, const Args<T>& xs, const Linearization<T>& lin) {
  if (lin.output) return *lin.output;
  return counted_evaluate(ab, f, xs).shape();
}

template <class T>
std::vector<Value<T>> gradient_from(const std::string& op, const Linearization<T>& lin, const Args<T>& xs,
                                    const Shape& output) {
  if (!output.is_scalar()) {
    throw ShapeError(op, "function returns " + output.to_string() + "; use jacobian for vector-valued functions");
  }
  std::vector<Value<T>> g;
  g.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto row = lin.jacobian[i].row(0);
    if (xs[i].is_scalar()) {
      g.emplace_back(row[0]);
    } else {
      g.push_back(Value<T>::vector(std::vector<T>(row.begin(), row.end())));
    }
  }
  return g;
}

template <class T>
PushforwardClosure<T> pushforward_from_jacobian(JacobianResult<T> J, std::vector<Shape> inputs, Shape output,
                                                std::optional<Value<T>> primal) {
  return {[J = std::move(J), inputs = std::move(inputs), output](const Args<T>& v) {
            check_shapes("pushforward_function", "tangent seed", v, inputs);
            Value<T> out = Value<T>::zeros(output);
            for (std::size_t r = 0; r < output.length; ++r) {
              T acc(0);
              for (std::size_t i = 0; i < inputs.size(); ++i) {
                for (std::size_t c = 0; c < inputs[i].length; ++c) acc = acc + J[i](r, c) * v[i][c];
              }
              out[r] = acc;
            }
            return out;
          },
          std::move(primal)};
}

template <class T>
PullbackClosure<T> pullback_from_jacobian(JacobianResult<T> J, std::vector<Shape> inputs, Shape output,
                                          std::optional<Value<T>> primal) {
  return {[J = std::move(J), inputs = std::move(inputs), output](const Value<T>& w) {
            if (w.shape() != output) {
              throw ShapeError("pullback_function",
                               "cotangent is " + w.shape().to_string() + ", output is " + output.to_string());
            }
            Args<T> out;
            out.reserve(inputs.size());
            for (std::size_t i = 0; i < inputs.size(); ++i) {
              Value<T> g = Value<T>::zeros(inputs[i]);
              for (std::size_t c = 0; c < inputs[i].length; ++c) {
                T acc(0);
                for (std::size_t r = 0; r < output.length; ++r) acc = acc + J[i](r, c) * w[r];
                g[c] = acc;
              }
              out.push_back(std::move(g));
            }
            return out;
          },
          std::move(primal)};
}

template <AnyBackend B, class F, class T>
std::vector<Value<T>> gradient_impl(const std::string& op, const B& ab, const F& f, const Args<T>& xs) {
  check_arguments(op, f, xs);
  const auto lin = linearize(op, ab, f, xs);
  return gradient_from(op, lin, xs, output_shape(ab, f, xs, lin));
}

/// x -> gradient(inner, f, x) for a function of one argument, generic over
/// the carrier so an outer backend can differentiate it.
template <AnyBackend Inner, class F>
auto gradient_map(const std::string& op, const Inner& inner, const F& f) {
  return [inner, f, op](const auto& ys) {
    auto g = gradient_impl(op, inner, f, ys);
    return std::move(g.front());
  };
}

template <AnyBackend Outer, AnyBackend Inner, class F, class T>
Matrix<T> hessian_with(const std::string& op, const Outer& outer, const Inner& inner, const F& f, const Value<T>& x) {
  if constexpr (is_declared<F>::value) {
    if (f.inputs.size() != 1) {
      throw ShapeError(op, "hessian needs a function of exactly one argument, got " + std::to_string(f.inputs.size()));
    }
  }
  const Args<T> xs{x};
  check_arguments(op, f, xs);
  auto lin = linearize(op, outer, gradient_map(op, inner, f), xs);
  return std::move(lin.jacobian.front());
}

}  // namespace detail

/// Jacobian-vector product closure at `xs`. Native for pushforward
/// backends; otherwise the Jacobian is materialized once here and every call
/// is a matrix-vector product.
template <AnyBackend B, class F, class T>
PushforwardClosure<T> pushforward_function(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "pushforward_function";
  if constexpr (HigherOrder<B>) {
    return pushforward_function(ab.inner(), f, xs);
  } else {
    detail::check_arguments(op, f, xs);
    if constexpr (*B::primitive_kind == PrimitiveKind::Pushforward) {
      return detail::native_pushforward(op, ab, f, xs);
    } else {
      auto lin = detail::linearize(op, ab, f, xs);
      const Shape output = detail::output_shape(ab, f, xs, lin);
      return detail::pushforward_from_jacobian(std::move(lin.jacobian), shapes_of(xs), output, std::move(lin.primal));
    }
  }
}

/// Vector-Jacobian product closure at `xs`. Native for pullback backends;
/// otherwise derived from a Jacobian materialized once here.
template <AnyBackend B, class F, class T>
PullbackClosure<T> pullback_function(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "pullback_function";
  if constexpr (HigherOrder<B>) {
    return pullback_function(ab.inner(), f, xs);
  } else {
    detail::check_arguments(op, f, xs);
    if constexpr (*B::primitive_kind == PrimitiveKind::Pullback) {
      return detail::native_pullback(op, ab, f, xs);
    } else {
      auto lin = detail::linearize(op, ab, f, xs);
      const Shape output = detail::output_shape(ab, f, xs, lin);
      return detail::pullback_from_jacobian(std::move(lin.jacobian), shapes_of(xs), output, std::move(lin.primal));
    }
  }
}

/// f(xs), through the backend's own forward pass when it has one.
template <AnyBackend B, class F, class T>
Value<T> primal_value(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "primal_value";
  if constexpr (HigherOrder<B>) {
    return primal_value(ab.inner(), f, xs);
  } else {
    detail::check_arguments(op, f, xs);
    if constexpr (B::has_native_primal) {
      using Q = std::remove_cvref_t<decltype(ab.primal())>;
      if constexpr (!std::is_invocable_v<const Q&, const F&, const Args<T>&>) {
        detail::cannot_lift(op, ab);
      } else {
        return ab.primal()(f, xs);
      }
    } else {
      return detail::counted_evaluate(ab, f, xs);
    }
  }
}

template <AnyBackend B, class F, class T>
JacobianResult<T> jacobian(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "jacobian";
  detail::check_arguments(op, f, xs);
  return detail::linearize(op, ab, f, xs).jacobian;
}

template <AnyBackend B, class F, class T>
ValueAndJacobian<T> value_and_jacobian(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "value_and_jacobian";
  detail::check_arguments(op, f, xs);
  auto lin = detail::linearize(op, ab, f, xs);
  Value<T> v = detail::primal_or_evaluate(ab, f, xs, lin);
  return {std::move(v), std::move(lin.jacobian)};
}

/// Gradient of a scalar-valued function, one entry per argument with the
/// argument's shape.
template <AnyBackend B, class F, class T>
std::vector<Value<T>> gradient(const B& ab, const F& f, const Args<T>& xs) {
  return detail::gradient_impl("gradient", ab, f, xs);
}

template <AnyBackend B, class F, class T>
ValueAndGradient<T> value_and_gradient(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "value_and_gradient";
  detail::check_arguments(op, f, xs);
  const auto lin = detail::linearize(op, ab, f, xs);
  Value<T> v = detail::primal_or_evaluate(ab, f, xs, lin);
  auto g = detail::gradient_from(op, lin, xs, v.shape());
  return {std::move(v), std::move(g)};
}

namespace detail {
template <class T>
void require_scalar_arguments(const std::string& op, const Args<T>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].is_scalar()) throw ShapeError(op, "argument " + std::to_string(i) + " is not a scalar");
  }
}

template <class T>
std::vector<T> scalars_of(const std::vector<Value<T>>& g) {
  std::vector<T> out;
  out.reserve(g.size());
  for (const auto& v : g) out.push_back(v[0]);
  return out;
}
}  // namespace detail

/// Partial derivatives of a scalar function of scalar arguments.
template <AnyBackend B, class F, class T>
std::vector<T> derivative(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "derivative";
  detail::require_scalar_arguments(op, xs);
  return detail::scalars_of(detail::gradient_impl(op, ab, f, xs));
}

template <AnyBackend B, class F, class T>
ValueAndDerivative<T> value_and_derivative(const B& ab, const F& f, const Args<T>& xs) {
  const std::string op = "value_and_derivative";
  detail::require_scalar_arguments(op, xs);
  detail::check_arguments(op, f, xs);
  const auto lin = detail::linearize(op, ab, f, xs);
  Value<T> v = detail::primal_or_evaluate(ab, f, xs, lin);
  auto d = detail::scalars_of(detail::gradient_from(op, lin, xs, v.shape()));
  return {std::move(v), std::move(d)};
}

/// Hessian of a scalar function of one argument: the outer backend's
/// Jacobian of the inner backend's gradient. A plain backend is nested over
/// itself.
template <AnyBackend B, class F, class T>
Matrix<T> hessian(const B& ab, const F& f, const Value<T>& x) {
  if constexpr (HigherOrder<B>) {
    return detail::hessian_with("hessian", ab.outer(), ab.inner(), f, x);
  } else {
    return detail::hessian_with("hessian", ab, ab, f, x);
  }
}

template <AnyBackend B, class F, class T>
ValueAndHessian<T> value_and_hessian(const B& ab, const F& f, const Value<T>& x) {
  Matrix<T> H = hessian(ab, f, x);
  return {primal_value(ab, f, Args<T>{x}), std::move(H)};
}

/// Value and gradient come from the inner backend, the Hessian from the
/// (outer, inner) composition.
template <AnyBackend B, class F, class T>
ValueGradientAndHessian<T> value_gradient_and_hessian(const B& ab, const F& f, const Value<T>& x) {
  auto vg = [&] {
    if constexpr (HigherOrder<B>) {
      return value_and_gradient(ab.inner(), f, Args<T>{x});
    } else {
      return value_and_gradient(ab, f, Args<T>{x});
    }
  }();
  Matrix<T> H = hessian(ab, f, x);
  return {std::move(vg.value), std::move(vg.gradient), std::move(H)};
}

}  // namespace adf

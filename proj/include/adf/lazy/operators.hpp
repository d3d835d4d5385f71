#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adf/core/derivation.hpp"

namespace adf {

namespace detail {

/// Closures built on first use and shared by copies of a lazy operator.
/// Population goes through std::call_once, so concurrent first calls are safe.
template <class T>
struct ClosureCache {
  std::once_flag pushforward_once;
  std::once_flag pullback_once;
  std::optional<PushforwardClosure<T>> pushforward;
  std::optional<PullbackClosure<T>> pullback;
};

template <AnyBackend B, class F, class T>
Shape discover_output(const B& ab, const F& f, const Args<T>& xs) {
  if (auto declared = declared_output(f)) return *declared;
  return counted_evaluate(ab, f, xs).shape();
}

}  // namespace detail

/// Matrix-free Jacobian of `f` at `xs`, in per-argument blocks.
///
/// Construction only discovers the output shape. The first right multiply
/// builds and caches a pushforward closure, the first left multiply a
/// pullback closure; later multiplies reuse them.
template <AnyBackend B, class F, class T = double>
class LazyJacobian {
 public:
  LazyJacobian(B ab, F f, Args<T> xs)
      : ab_(std::move(ab)), f_(std::move(f)), xs_(std::move(xs)), cache_(std::make_shared<detail::ClosureCache<T>>()) {
    detail::check_arguments("lazy_jacobian", f_, xs_);
    inputs_ = shapes_of(xs_);
    output_ = detail::discover_output(ab_, f_, xs_);
  }

  const std::vector<Shape>& input_shapes() const { return inputs_; }
  const Shape& output_shape() const { return output_; }

  /// J v = sum_i J_i v_i.
  Value<T> right_multiply(const Args<T>& v) const {
    check_shapes("right_multiply", "tangent seed", v, inputs_);
    std::call_once(cache_->pushforward_once, [&] { cache_->pushforward = pushforward_function(ab_, f_, xs_); });
    return (*cache_->pushforward)(v);
  }

  Value<T> right_multiply(const Value<T>& v) const { return right_multiply(single_argument_seed(v)); }

  /// (J_1^T w, ..., J_k^T w).
  Args<T> left_multiply(const Value<T>& w) const {
    if (w.shape() != output_) {
      throw ShapeError("left_multiply", "cotangent is " + w.shape().to_string() + ", output is " + output_.to_string());
    }
    std::call_once(cache_->pullback_once, [&] { cache_->pullback = pullback_function(ab_, f_, xs_); });
    return (*cache_->pullback)(w);
  }

  JacobianResult<T> materialize() const { return jacobian(ab_, f_, xs_); }

  friend Value<T> operator*(const LazyJacobian& J, const Args<T>& v) { return J.right_multiply(v); }
  friend Value<T> operator*(const LazyJacobian& J, const Value<T>& v) { return J.right_multiply(v); }
  friend Args<T> operator*(const Value<T>& w, const LazyJacobian& J) { return J.left_multiply(w); }

 protected:
  Args<T> single_argument_seed(const Value<T>& v) const {
    if (inputs_.size() != 1) {
      throw ShapeError("right_multiply", "function takes " + std::to_string(inputs_.size()) +
                                             " arguments; pass one seed per argument");
    }
    return Args<T>{v};
  }

  B ab_;
  F f_;
  Args<T> xs_;
  std::vector<Shape> inputs_;
  Shape output_;
  std::shared_ptr<detail::ClosureCache<T>> cache_;
};

/// Lazy gradient of a scalar function: right multiplication gives the
/// directional derivative, left multiplication by a scalar scales the gradient.
template <AnyBackend B, class F, class T = double>
class LazyGradient : public LazyJacobian<B, F, T> {
  using Base = LazyJacobian<B, F, T>;

 public:
  LazyGradient(B ab, F f, Args<T> xs) : Base(std::move(ab), std::move(f), std::move(xs)) {
    if (!this->output_.is_scalar()) {
      throw ShapeError("lazy_gradient",
                       "function returns " + this->output_.to_string() + "; use lazy_jacobian for vector outputs");
    }
  }

  T right_multiply(const Args<T>& v) const { return Base::right_multiply(v).scalar(); }
  T right_multiply(const Value<T>& v) const { return Base::right_multiply(v).scalar(); }
  Args<T> left_multiply(const T& w) const { return Base::left_multiply(Value<T>(w)); }

  std::vector<Value<T>> materialize() const { return gradient(this->ab_, this->f_, this->xs_); }

  friend T operator*(const LazyGradient& g, const Args<T>& v) { return g.right_multiply(v); }
  friend T operator*(const LazyGradient& g, const Value<T>& v) { return g.right_multiply(v); }
  friend Args<T> operator*(const T& w, const LazyGradient& g) { return g.left_multiply(w); }
};

/// Lazy derivative of a scalar function of scalar arguments.
template <AnyBackend B, class F, class T = double>
class LazyDerivative : public LazyJacobian<B, F, T> {
  using Base = LazyJacobian<B, F, T>;

 public:
  LazyDerivative(B ab, F f, Args<T> xs) : Base(std::move(ab), std::move(f), std::move(xs)) {
    for (std::size_t i = 0; i < this->inputs_.size(); ++i) {
      if (!this->inputs_[i].is_scalar()) {
        throw ShapeError("lazy_derivative", "argument " + std::to_string(i) + " is not a scalar");
      }
    }
    if (!this->output_.is_scalar()) {
      throw ShapeError("lazy_derivative", "function returns " + this->output_.to_string() + ", expected a scalar");
    }
  }

  /// sum_i (df/dx_i) v_i.
  T right_multiply(const std::vector<T>& v) const {
    Args<T> seed;
    seed.reserve(v.size());
    for (const auto& vi : v) seed.emplace_back(vi);
    return Base::right_multiply(seed).scalar();
  }

  /// (df/dx_1 w, ..., df/dx_k w).
  std::vector<T> left_multiply(const T& w) const {
    const Args<T> g = Base::left_multiply(Value<T>(w));
    std::vector<T> out;
    out.reserve(g.size());
    for (const auto& gi : g) out.push_back(gi[0]);
    return out;
  }

  std::vector<T> materialize() const { return derivative(this->ab_, this->f_, this->xs_); }

  friend T operator*(const LazyDerivative& d, const std::vector<T>& v) { return d.right_multiply(v); }
  friend std::vector<T> operator*(const T& w, const LazyDerivative& d) { return d.left_multiply(w); }
};

/// Matrix-free Hessian of a scalar function of one argument. Products are
/// pushforwards of the inner gradient map through the outer backend.
template <AnyBackend B, class F, class T = double>
class LazyHessian {
 public:
  LazyHessian(B ab, F f, Value<T> x)
      : ab_(std::move(ab)), f_(std::move(f)), x_(std::move(x)), cache_(std::make_shared<detail::ClosureCache<T>>()) {
    const Args<T> xs{x_};
    detail::check_arguments("lazy_hessian", f_, xs);
    const Shape output = detail::discover_output(ab_, f_, xs);
    if (!output.is_scalar()) {
      throw ShapeError("lazy_hessian", "function returns " + output.to_string() + ", expected a scalar");
    }
  }

  Shape shape() const { return x_.shape(); }

  /// H v, computed without forming H when the outer backend's pushforward is
  /// native.
  Value<T> hessian_vector_product(const Value<T>& v) const {
    if (v.shape() != x_.shape()) {
      throw ShapeError("hessian_vector_product", "vector is " + v.shape().to_string() + ", point is " +
                                                     x_.shape().to_string());
    }
    std::call_once(cache_->pushforward_once, [&] {
      if constexpr (HigherOrder<B>) {
        cache_->pushforward = build(ab_.outer(), ab_.inner());
      } else {
        cache_->pushforward = build(ab_, ab_);
      }
    });
    return (*cache_->pushforward)(Args<T>{v});
  }

  Matrix<T> materialize() const { return hessian(ab_, f_, x_); }

  friend Value<T> operator*(const LazyHessian& H, const Value<T>& v) { return H.hessian_vector_product(v); }

 private:
  template <AnyBackend Outer, AnyBackend Inner>
  PushforwardClosure<T> build(const Outer& outer, const Inner& inner) const {
    return pushforward_function(outer, detail::gradient_map("hessian_vector_product", inner, f_), Args<T>{x_});
  }

  B ab_;
  F f_;
  Value<T> x_;
  std::shared_ptr<detail::ClosureCache<T>> cache_;
};

template <AnyBackend B, class F, class T>
LazyJacobian<B, F, T> lazy_jacobian(const B& ab, F f, Args<T> xs) {
  return {ab, std::move(f), std::move(xs)};
}

template <AnyBackend B, class F, class T>
LazyGradient<B, F, T> lazy_gradient(const B& ab, F f, Args<T> xs) {
  return {ab, std::move(f), std::move(xs)};
}

template <AnyBackend B, class F, class T>
LazyDerivative<B, F, T> lazy_derivative(const B& ab, F f, Args<T> xs) {
  return {ab, std::move(f), std::move(xs)};
}

template <AnyBackend B, class F, class T>
LazyHessian<B, F, T> lazy_hessian(const B& ab, F f, Value<T> x) {
  return {ab, std::move(f), std::move(x)};
}

}  // namespace adf

#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adf/core/primitives.hpp"
#include "adf/core/value.hpp"

namespace adf {

template <class T>
class Tape;

/// One recorded scalar operation. Partials are the local derivatives with
/// respect to each parent, evaluated at record time.
template <class T>
struct TapeNode {
  std::string_view op;
  std::array<std::size_t, 2> parents{};
  std::array<T, 2> partials{};
  std::uint8_t arity = 0;
  T primal{};
};

/// Reverse-mode carrier. A variable either lives on a tape (and records every
/// operation it takes part in) or is a constant.
///
/// `T` may itself be a dual or tape carrier; the reverse sweep of a nested
/// tape then records onto the enclosing one.
template <class T>
class Var {
 public:
  using value_type = T;

  Var() : value_(0) {}
  Var(T v) : value_(std::move(v)) {}
  template <Arithmetic U>
    requires(!std::same_as<U, T>)
  Var(U v) : value_(v) {}

  const T& value() const { return value_; }
  Tape<T>* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool is_constant() const { return tape_ == nullptr; }

  friend double value_of(const Var& a) { return value_of(a.value_); }

  friend Var operator-(const Var& a) { return unary("neg", a, -a.value_, T(-1)); }
  friend Var operator+(const Var& a) { return a; }

  friend Var operator+(const Var& a, const Var& b) { return binary("add", a, b, a.value_ + b.value_, T(1), T(1)); }
  friend Var operator-(const Var& a, const Var& b) { return binary("sub", a, b, a.value_ - b.value_, T(1), T(-1)); }
  friend Var operator*(const Var& a, const Var& b) { return binary("mul", a, b, a.value_ * b.value_, b.value_, a.value_); }
  friend Var operator/(const Var& a, const Var& b) {
    T q = a.value_ / b.value_;
    T inv = T(1) / b.value_;
    T dq = -q / b.value_;
    return binary("div", a, b, std::move(q), std::move(inv), std::move(dq));
  }

  Var& operator+=(const Var& b) { return *this = *this + b; }
  Var& operator-=(const Var& b) { return *this = *this - b; }
  Var& operator*=(const Var& b) { return *this = *this * b; }
  Var& operator/=(const Var& b) { return *this = *this / b; }

  friend bool operator==(const Var& a, const Var& b) { return a.value_ == b.value_; }
  friend bool operator<(const Var& a, const Var& b) { return a.value_ < b.value_; }
  friend bool operator<=(const Var& a, const Var& b) { return a.value_ <= b.value_; }
  friend bool operator>(const Var& a, const Var& b) { return a.value_ > b.value_; }
  friend bool operator>=(const Var& a, const Var& b) { return a.value_ >= b.value_; }

  friend Var exp(const Var& a) {
    using std::exp;
    T e = exp(a.value_);
    return unary("exp", a, e, e);
  }
  friend Var log(const Var& a) {
    using std::log;
    return unary("log", a, log(a.value_), T(1) / a.value_);
  }
  friend Var sin(const Var& a) {
    using std::cos;
    using std::sin;
    return unary("sin", a, sin(a.value_), cos(a.value_));
  }
  friend Var cos(const Var& a) {
    using std::cos;
    using std::sin;
    return unary("cos", a, cos(a.value_), -sin(a.value_));
  }
  friend Var tanh(const Var& a) {
    using std::tanh;
    return unary("tanh", a, tanh(a.value_), tanh_derivative(a.value_));
  }
  friend Var sqrt(const Var& a) {
    using std::sqrt;
    T s = sqrt(a.value_);
    T d = T(1) / (T(2) * s);
    return unary("sqrt", a, std::move(s), std::move(d));
  }
  // abs'(0) is taken to be 0.
  friend Var abs(const Var& a) {
    using std::abs;
    const double v = value_of(a.value_);
    return unary("abs", a, abs(a.value_), T(v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0)));
  }
  friend Var pow(const Var& a, const Var& b) {
    using std::log;
    using std::pow;
    T p = pow(a.value_, b.value_);
    T da = b.value_ * pow(a.value_, b.value_ - T(1));
    T db = p * log(a.value_);
    return binary("pow", a, b, std::move(p), std::move(da), std::move(db));
  }
  template <Arithmetic U>
  friend Var pow(const Var& a, U n) {
    using std::pow;
    const double e = static_cast<double>(n);
    return unary("pow", a, pow(a.value_, e), e * pow(a.value_, e - 1.0));
  }
  template <Arithmetic U>
  friend Var pow(U c, const Var& b) {
    using std::pow;
    const double base = static_cast<double>(c);
    T p = pow(base, b.value_);
    T d = p * std::log(base);
    return unary("pow", b, std::move(p), std::move(d));
  }

  friend Var atan(const Var&) { unsupported("atan"); }
  friend Var asin(const Var&) { unsupported("asin"); }
  friend Var acos(const Var&) { unsupported("acos"); }
  friend Var sinh(const Var&) { unsupported("sinh"); }
  friend Var cosh(const Var&) { unsupported("cosh"); }
  friend Var erf(const Var&) { unsupported("erf"); }

 private:
  friend class Tape<T>;

  Var(T v, Tape<T>* tape, std::size_t index) : value_(std::move(v)), tape_(tape), index_(index) {}

  [[noreturn]] static void unsupported(const char* op) {
    throw ConfigError("tape", std::string("unsupported scalar operation '") + op + "'");
  }

  static Var unary(std::string_view op, const Var& a, T value, T partial) {
    if (!a.tape_) return Var(std::move(value));
    return a.tape_->record(op, std::move(value), {a.index_, 0}, {std::move(partial), T(0)}, 1);
  }

  static Var binary(std::string_view op, const Var& a, const Var& b, T value, T pa, T pb) {
    if (a.tape_ && b.tape_) {
      if (a.tape_ != b.tape_) throw UsageError("tape", "operands of '" + std::string(op) + "' live on different tapes");
      return a.tape_->record(op, std::move(value), {a.index_, b.index_}, {std::move(pa), std::move(pb)}, 2);
    }
    if (a.tape_) return a.tape_->record(op, std::move(value), {a.index_, 0}, {std::move(pa), T(0)}, 1);
    if (b.tape_) return b.tape_->record(op, std::move(value), {b.index_, 0}, {std::move(pb), T(0)}, 1);
    return Var(std::move(value));
  }

  T value_;
  Tape<T>* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Append-only operation record. Nodes are topologically ordered: parents
/// always precede their children.
template <class T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> variable(T value) { return record("input", std::move(value), {0, 0}, {T(0), T(0)}, 0); }

  Var<T> record(std::string_view op, T value, std::array<std::size_t, 2> parents, std::array<T, 2> partials,
                std::uint8_t arity) {
    const std::size_t index = nodes_.size();
    nodes_.push_back(TapeNode<T>{op, parents, std::move(partials), arity, value});
    return Var<T>(std::move(value), this, index);
  }

  std::size_t size() const { return nodes_.size(); }
  const TapeNode<T>& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<TapeNode<T>>& nodes() const { return nodes_; }

  /// One reverse sweep from the given (node, adjoint) seeds. Adjoints live in
  /// per-sweep scratch so the tape itself stays read-only.
  std::vector<T> adjoints(const std::vector<std::pair<std::size_t, T>>& seeds) const {
    std::vector<T> adj(nodes_.size(), T(0));
    for (const auto& [index, w] : seeds) adj[index] = adj[index] + w;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      const auto& n = nodes_[i];
      for (std::uint8_t k = 0; k < n.arity; ++k) {
        adj[n.parents[k]] = adj[n.parents[k]] + n.partials[k] * adj[i];
      }
    }
    return adj;
  }

 private:
  std::vector<TapeNode<T>> nodes_;
};

/// A function traced once at a fixed point. The recording answers any number
/// of pullbacks until it is invalidated.
template <class T>
class TapeRecording {
 public:
  template <class F>
  TapeRecording(const F& f, const Args<T>& xs) : tape_(std::make_unique<Tape<T>>()), input_shapes_(shapes_of(xs)) {
    Args<Var<T>> inputs;
    inputs.reserve(xs.size());
    for (const auto& x : xs) {
      std::vector<Var<T>> vars;
      std::vector<std::size_t> slots;
      for (const auto& xi : x) {
        vars.push_back(tape_->variable(xi));
        slots.push_back(vars.back().index());
      }
      input_slots_.push_back(std::move(slots));
      if (x.is_scalar()) {
        inputs.emplace_back(std::move(vars.front()));
      } else {
        inputs.push_back(Value<Var<T>>::vector(std::move(vars)));
      }
    }

    Value<Var<T>> out = evaluate(f, inputs);
    std::vector<T> primal;
    primal.reserve(out.size());
    for (const auto& y : out) {
      if (y.tape() != nullptr && y.tape() != tape_.get()) {
        throw UsageError("tape_pullback", "function output was recorded on a foreign tape");
      }
      output_slots_.push_back(y.is_constant() ? std::nullopt : std::optional<std::size_t>(y.index()));
      primal.push_back(y.value());
    }
    primal_ = out.is_scalar() ? Value<T>(std::move(primal.front())) : Value<T>::vector(std::move(primal));
  }

  const Value<T>& primal() const { return primal_; }
  const Tape<T>& tape() const { return *tape_; }
  const std::vector<std::vector<std::size_t>>& input_slots() const { return input_slots_; }

  void invalidate() { valid_ = false; }
  bool valid() const { return valid_; }

  /// Seeds the output adjoints with `cotangent` and returns the adjoint of
  /// every argument.
  Args<T> pullback(const Value<T>& cotangent) const {
    if (!valid_) throw UsageError("tape_pullback", "pullback called on an invalidated tape");
    if (cotangent.shape() != primal_.shape()) {
      throw ShapeError("tape_pullback",
                       "cotangent is " + cotangent.shape().to_string() + ", output is " + primal_.shape().to_string());
    }
    std::vector<std::pair<std::size_t, T>> seeds;
    for (std::size_t k = 0; k < output_slots_.size(); ++k) {
      if (output_slots_[k]) seeds.emplace_back(*output_slots_[k], cotangent[k]);
    }
    const std::vector<T> adj = tape_->adjoints(seeds);

    Args<T> out;
    out.reserve(input_slots_.size());
    for (std::size_t i = 0; i < input_slots_.size(); ++i) {
      std::vector<T> g;
      g.reserve(input_slots_[i].size());
      for (std::size_t slot : input_slots_[i]) g.push_back(adj[slot]);
      if (input_shapes_[i].is_scalar()) {
        out.emplace_back(std::move(g.front()));
      } else {
        out.push_back(Value<T>::vector(std::move(g)));
      }
    }
    return out;
  }

 private:
  std::unique_ptr<Tape<T>> tape_;
  std::vector<Shape> input_shapes_;
  std::vector<std::vector<std::size_t>> input_slots_;
  std::vector<std::optional<std::size_t>> output_slots_;
  Value<T> primal_;
  std::atomic<bool> valid_{true};
};

/// Output of `f` at `xs` read from the forward sweep of a fresh recording.
template <class F, class T>
Value<T> tape_primal(const F& f, const Args<T>& xs) {
  return TapeRecording<T>(f, xs).primal();
}

/// Reverse-mode pullback: traces `f` once; each call runs one reverse sweep.
template <class F, class T>
PullbackClosure<T> tape_pullback(const F& f, const Args<T>& xs) {
  auto recording = std::make_shared<const TapeRecording<T>>(f, xs);
  Value<T> primal = recording->primal();
  return {[recording](const Value<T>& w) { return recording->pullback(w); }, std::move(primal)};
}

}  // namespace adf

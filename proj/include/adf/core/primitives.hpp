#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "adf/core/value.hpp"

namespace adf {

/// The single differentiation capability a backend implements natively.
enum class PrimitiveKind { Jacobian, Pushforward, Pullback };

enum class Mode { ForwardMode, ReverseMode, FiniteDifference, HigherOrder };

inline std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Jacobian: return "jacobian";
    case PrimitiveKind::Pushforward: return "pushforward";
    case PrimitiveKind::Pullback: return "pullback";
  }
  return "?";
}

inline std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::ForwardMode: return "forward";
    case Mode::ReverseMode: return "reverse";
    case Mode::FiniteDifference: return "finite-difference";
    case Mode::HigherOrder: return "higher-order";
  }
  return "?";
}

struct BackendDescriptor {
  std::string name;
  Mode mode = Mode::ForwardMode;
  /// Empty only for higher-order backends, which delegate to their components.
  std::optional<PrimitiveKind> native_primitive;
  bool has_native_primal = false;
};

/// Jacobian-vector product at a fixed point: tangent seed (one value per
/// argument) to output tangent.
template <class T>
struct PushforwardClosure {
  std::function<Value<T>(const Args<T>&)> apply;
  /// Output of the forward pass, when the mechanism produced one.
  std::optional<Value<T>> primal;

  Value<T> operator()(const Args<T>& seed) const { return apply(seed); }
};

/// Vector-Jacobian product at a fixed point: output cotangent to one
/// cotangent per argument.
template <class T>
struct PullbackClosure {
  std::function<Args<T>(const Value<T>&)> apply;
  std::optional<Value<T>> primal;

  Args<T> operator()(const Value<T>& cotangent) const { return apply(cotangent); }
};

struct CallCounts {
  std::uint64_t primitive_builds = 0;
  std::uint64_t pushforward_calls = 0;
  std::uint64_t pullback_calls = 0;
  std::uint64_t jacobian_calls = 0;
  std::uint64_t function_evals = 0;

  CallCounts& operator+=(const CallCounts& o) {
    primitive_builds += o.primitive_builds;
    pushforward_calls += o.pushforward_calls;
    pullback_calls += o.pullback_calls;
    jacobian_calls += o.jacobian_calls;
    function_evals += o.function_evals;
    return *this;
  }

  friend bool operator==(const CallCounts&, const CallCounts&) = default;
};

/// Per-backend instrumentation. Every native primitive invocation made by the
/// derivation engine goes through these counters.
///
/// - primitive_builds: native closures (or tapes) constructed
/// - pushforward_calls / pullback_calls: native closure invocations
/// - jacobian_calls: native Jacobian invocations
/// - function_evals: plain evaluations made by the engine itself
class CallCounters {
 public:
  std::atomic<std::uint64_t> primitive_builds{0};
  std::atomic<std::uint64_t> pushforward_calls{0};
  std::atomic<std::uint64_t> pullback_calls{0};
  std::atomic<std::uint64_t> jacobian_calls{0};
  std::atomic<std::uint64_t> function_evals{0};

  CallCounts snapshot() const {
    return {primitive_builds.load(), pushforward_calls.load(), pullback_calls.load(), jacobian_calls.load(),
            function_evals.load()};
  }

  void reset() {
    primitive_builds = 0;
    pushforward_calls = 0;
    pullback_calls = 0;
    jacobian_calls = 0;
    function_evals = 0;
  }
};

}  // namespace adf

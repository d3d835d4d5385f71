#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "adf/core/errors.hpp"
#include "adf/core/primitives.hpp"
#include "adf/core/value.hpp"

namespace adf {

/// Placeholder for backends without a native primal extractor.
struct NoPrimal {};

namespace detail {

/// Stand-in function used to inspect a primitive implementation's signature.
struct ProbeFunction {
  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return xs.front();
  }
};

template <class P>
consteval std::optional<PrimitiveKind> detect_primitive() {
  if constexpr (!std::is_invocable_v<const P&, const ProbeFunction&, const Args<double>&>) {
    return std::nullopt;
  } else {
    using R = std::remove_cvref_t<std::invoke_result_t<const P&, const ProbeFunction&, const Args<double>&>>;
    if constexpr (std::same_as<R, JacobianResult<double>>) return PrimitiveKind::Jacobian;
    if constexpr (std::same_as<R, PushforwardClosure<double>>) return PrimitiveKind::Pushforward;
    if constexpr (std::same_as<R, PullbackClosure<double>>) return PrimitiveKind::Pullback;
    return std::nullopt;
  }
}

template <class Q>
consteval bool valid_primal() {
  if constexpr (std::same_as<Q, NoPrimal>) {
    return true;
  } else if constexpr (!std::is_invocable_v<const Q&, const ProbeFunction&, const Args<double>&>) {
    return false;
  } else {
    return std::same_as<std::remove_cvref_t<std::invoke_result_t<const Q&, const ProbeFunction&, const Args<double>&>>,
                        Value<double>>;
  }
}

}  // namespace detail

/// Names of registered backends. Registration happens at startup; the
/// registry is not consulted by the derivation engine afterwards.
class Registry {
 public:
  void add(const BackendDescriptor& descriptor) {
    if (descriptor.name.empty()) throw ConfigError("register_backend", "backend name must not be empty");
    if (contains(descriptor.name)) {
      throw ConfigError("register_backend", "backend '" + descriptor.name + "' is already registered");
    }
    entries_.push_back(descriptor);
  }

  bool contains(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& d) { return d.name == name; });
  }

  const std::vector<BackendDescriptor>& descriptors() const { return entries_; }

 private:
  std::vector<BackendDescriptor> entries_;
};

template <class Primitive, class Primal>
class Backend;

template <class Primitive, class Primal = NoPrimal>
Backend<Primitive, Primal> register_backend(Registry& registry, BackendDescriptor descriptor, Primitive primitive,
                                            Primal primal = {});

/// Handle to a registered backend: a descriptor plus the implementation of
/// exactly one native primitive and, optionally, a primal extractor.
///
/// `Primitive` is called as `primitive(f, xs)` for any carrier type and
/// returns a `JacobianResult`, `PushforwardClosure` or `PullbackClosure`.
/// Handles are immutable apart from their call counters and cheap to copy.
template <class Primitive, class Primal>
class Backend {
 public:
  static constexpr std::optional<PrimitiveKind> primitive_kind = detail::detect_primitive<Primitive>();
  static constexpr bool has_native_primal = !std::same_as<Primal, NoPrimal>;

  const BackendDescriptor& descriptor() const { return *descriptor_; }
  const std::string& name() const { return descriptor_->name; }
  const Primitive& primitive() const { return primitive_; }
  const Primal& primal() const { return primal_; }
  CallCounters& counters() const { return *counters_; }
  const std::shared_ptr<CallCounters>& counters_ptr() const { return counters_; }

 private:
  template <class P, class Q>
  friend Backend<P, Q> register_backend(Registry&, BackendDescriptor, P, Q);

  Backend(BackendDescriptor descriptor, Primitive primitive, Primal primal)
      : descriptor_(std::make_shared<const BackendDescriptor>(std::move(descriptor))),
        primitive_(std::move(primitive)),
        primal_(std::move(primal)),
        counters_(std::make_shared<CallCounters>()) {}

  std::shared_ptr<const BackendDescriptor> descriptor_;
  Primitive primitive_;
  Primal primal_;
  std::shared_ptr<CallCounters> counters_;
};

/// Registers a backend declaring one native primitive. The other two
/// primitives and every derived operation are synthesized by the engine.
template <class Primitive, class Primal>
Backend<Primitive, Primal> register_backend(Registry& registry, BackendDescriptor descriptor, Primitive primitive,
                                            Primal primal) {
  constexpr auto detected = detail::detect_primitive<Primitive>();
  const std::string& name = descriptor.name;
  if (descriptor.mode == Mode::HigherOrder) {
    throw ConfigError("register_backend", "'" + name + "': higher-order backends are built with make_higher_order");
  }
  if (!descriptor.native_primitive) {
    throw ConfigError("register_backend", "'" + name + "' does not declare a native primitive");
  }
  if (!detected) {
    throw ConfigError("register_backend", "'" + name +
                                              "': primitive must map (f, xs) to a JacobianResult, "
                                              "PushforwardClosure or PullbackClosure");
  }
  if (*detected != *descriptor.native_primitive) {
    throw ConfigError("register_backend", "'" + name + "' declares " +
                                              std::string(to_string(*descriptor.native_primitive)) +
                                              " but the implementation provides " + std::string(to_string(*detected)));
  }
  if (descriptor.has_native_primal != Backend<Primitive, Primal>::has_native_primal) {
    throw ConfigError("register_backend", "'" + name + "': a primal extractor must be supplied iff has_native_primal");
  }
  if constexpr (!detail::valid_primal<Primal>()) {
    throw ConfigError("register_backend", "'" + name + "': primal extractor must map (f, xs) to a Value");
  }
  registry.add(descriptor);
  return Backend<Primitive, Primal>(std::move(descriptor), std::move(primitive), std::move(primal));
}

/// Ordered (outer, inner) pair. Second derivatives are the outer backend's
/// Jacobian of the inner backend's gradient; first-order requests go to the
/// inner backend.
template <class Outer, class Inner>
class HigherOrderBackend {
 public:
  HigherOrderBackend(BackendDescriptor descriptor, Outer outer, Inner inner)
      : descriptor_(std::make_shared<const BackendDescriptor>(std::move(descriptor))),
        outer_(std::move(outer)),
        inner_(std::move(inner)) {}

  const BackendDescriptor& descriptor() const { return *descriptor_; }
  const std::string& name() const { return descriptor_->name; }
  const Outer& outer() const { return outer_; }
  const Inner& inner() const { return inner_; }

 private:
  std::shared_ptr<const BackendDescriptor> descriptor_;
  Outer outer_;
  Inner inner_;
};

template <class B>
struct is_plain_backend : std::false_type {};
template <class P, class Q>
struct is_plain_backend<Backend<P, Q>> : std::true_type {};

template <class B>
struct is_higher_order_backend : std::false_type {};
template <class O, class I>
struct is_higher_order_backend<HigherOrderBackend<O, I>> : std::true_type {};

template <class B>
concept PlainBackend = is_plain_backend<std::remove_cvref_t<B>>::value;
template <class B>
concept HigherOrder = is_higher_order_backend<std::remove_cvref_t<B>>::value;
template <class B>
concept AnyBackend = PlainBackend<B> || HigherOrder<B>;

/// Composes two registered backends. The default name is "outer-over-inner".
template <AnyBackend Outer, AnyBackend Inner>
HigherOrderBackend<Outer, Inner> make_higher_order(Registry& registry, Outer outer, Inner inner,
                                                   std::string name = {}) {
  for (const auto* component : {&outer.descriptor(), &inner.descriptor()}) {
    if (!registry.contains(component->name)) {
      throw ConfigError("make_higher_order", "component backend '" + component->name + "' is not registered");
    }
  }
  if (name.empty()) name = outer.name() + "-over-" + inner.name();
  BackendDescriptor descriptor{std::move(name), Mode::HigherOrder, std::nullopt, inner.descriptor().has_native_primal};
  registry.add(descriptor);
  return HigherOrderBackend<Outer, Inner>(std::move(descriptor), std::move(outer), std::move(inner));
}

/// Sum of the call counters reachable from a backend, each counted once.
template <AnyBackend B>
CallCounts total_counts(const B& ab) {
  std::vector<const CallCounters*> seen;
  CallCounts total;
  auto visit = [&](const auto& self, const auto& b) -> void {
    if constexpr (HigherOrder<decltype(b)>) {
      self(self, b.outer());
      self(self, b.inner());
    } else {
      const CallCounters* c = &b.counters();
      if (std::find(seen.begin(), seen.end(), c) == seen.end()) {
        seen.push_back(c);
        total += c->snapshot();
      }
    }
  };
  visit(visit, ab);
  return total;
}

template <AnyBackend B>
void reset_counts(const B& ab) {
  if constexpr (HigherOrder<B>) {
    reset_counts(ab.outer());
    reset_counts(ab.inner());
  } else {
    ab.counters().reset();
  }
}

}  // namespace adf

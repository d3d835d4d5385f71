#pragma once

#include <string>
#include <utility>

#include "adf/backends/dual.hpp"
#include "adf/backends/fdm.hpp"
#include "adf/backends/tape.hpp"
#include "adf/core/backend.hpp"

namespace adf {

/// Central finite differences, exposed as a pushforward.
struct FiniteDifferencePrimitive {
  FDMConfig config;
  StencilWeights stencil;

  template <class F, class T>
  PushforwardClosure<T> operator()(const F& f, const Args<T>& xs) const {
    return fdm_pushforward(config, stencil, f, xs);
  }
};

/// Forward mode on dual carriers.
struct DualPrimitive {
  template <class F, class T>
  PushforwardClosure<T> operator()(const F& f, const Args<T>& xs) const {
    return dual_pushforward(f, xs);
  }
};

struct DualPrimal {
  template <class F, class T>
  Value<T> operator()(const F& f, const Args<T>& xs) const {
    return dual_primal(f, xs);
  }
};

/// Reverse mode on a tape.
struct TapePrimitive {
  template <class F, class T>
  PullbackClosure<T> operator()(const F& f, const Args<T>& xs) const {
    return tape_pullback(f, xs);
  }
};

struct TapePrimal {
  template <class F, class T>
  Value<T> operator()(const F& f, const Args<T>& xs) const {
    return tape_primal(f, xs);
  }
};

using FdmBackend = Backend<FiniteDifferencePrimitive, NoPrimal>;
using DualBackend = Backend<DualPrimitive, DualPrimal>;
using TapeBackend = Backend<TapePrimitive, TapePrimal>;

inline FdmBackend make_fdm_backend(Registry& registry, std::string name = "fdm", FDMConfig config = {}) {
  StencilWeights stencil = config.stencil();
  return register_backend(registry,
                          BackendDescriptor{std::move(name), Mode::FiniteDifference, PrimitiveKind::Pushforward, false},
                          FiniteDifferencePrimitive{config, std::move(stencil)});
}

inline DualBackend make_dual_backend(Registry& registry, std::string name = "dual") {
  return register_backend(registry,
                          BackendDescriptor{std::move(name), Mode::ForwardMode, PrimitiveKind::Pushforward, true},
                          DualPrimitive{}, DualPrimal{});
}

inline TapeBackend make_tape_backend(Registry& registry, std::string name = "tape") {
  return register_backend(registry,
                          BackendDescriptor{std::move(name), Mode::ReverseMode, PrimitiveKind::Pullback, true},
                          TapePrimitive{}, TapePrimal{});
}

}  // namespace adf

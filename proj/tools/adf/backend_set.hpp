#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "adf/adf.hpp"

namespace adf::cli {

/// The backends the command-line tool can select by name.
struct BackendSet {
  Registry registry;
  FdmBackend fdm = make_fdm_backend(registry);
  DualBackend dual = make_dual_backend(registry);
  TapeBackend tape = make_tape_backend(registry);
  HigherOrderBackend<DualBackend, TapeBackend> dual_over_tape = make_higher_order(registry, dual, tape);
  HigherOrderBackend<TapeBackend, DualBackend> tape_over_dual = make_higher_order(registry, tape, dual);

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> all{"fdm", "dual", "tape", "dual-over-tape", "tape-over-dual"};
    return all;
  }

  static bool is_finite_difference(std::string_view name) { return name == "fdm"; }

  /// Calls `visit` with the backend registered under `name`.
  template <class V>
  decltype(auto) visit(std::string_view name, V&& v) const {
    if (name == "fdm") return v(fdm);
    if (name == "dual") return v(dual);
    if (name == "tape") return v(tape);
    if (name == "dual-over-tape") return v(dual_over_tape);
    if (name == "tape-over-dual") return v(tape_over_dual);
    throw UsageError("backend", "unknown backend '" + std::string(name) + "'");
  }
};

}  // namespace adf::cli

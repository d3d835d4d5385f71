#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "adf/adf.hpp"
#include "backend_set.hpp"
#include "problems.hpp"
#include "report.hpp"

namespace adf::cli {

enum class ExitCode : int { Success = 0, Failure = 1, Usage = 2 };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"agree", "gauss-newton", "newton", "seedcount", "list-backends"};
  return names;
}

struct RunSpec {
  std::string command;
  std::vector<std::string> backends;
  std::string problem;
  std::size_t n = 10;
  std::size_t m = 10;
  bool json = false;
  std::uint64_t seed = 42;
  std::optional<double> tolerance;
};

struct Outcome {
  Json report;
  /// Human-readable reasons for a nonzero exit; empty on success.
  std::vector<std::string> failures;
};

inline constexpr double ad_ad_tolerance = 1e-8;
inline constexpr double ad_fdm_tolerance = 1e-5;

inline double pair_tolerance(const RunSpec& spec, std::string_view a, std::string_view b) {
  if (spec.tolerance) return *spec.tolerance;
  return BackendSet::is_finite_difference(a) || BackendSet::is_finite_difference(b) ? ad_fdm_tolerance
                                                                                    : ad_ad_tolerance;
}

inline double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    if (!(d <= worst)) worst = d;
  }
  return worst;
}

inline Json to_json(const Value<double>& v) {
  if (v.is_scalar()) return v[0];
  return Json(v.data());
}

template <class T>
void append(std::vector<double>& out, const Matrix<T>& m) {
  out.insert(out.end(), m.data().begin(), m.data().end());
}

inline void append(std::vector<double>& out, const Value<double>& v) { out.insert(out.end(), v.begin(), v.end()); }

inline Json report_header(const RunSpec& spec) {
  Json report;
  report["command"] = spec.command;
  report["backends"] = spec.backends;
  report["results"] = Json::array();
  report["tolerances"] = Json::object();
  report["seed"] = spec.seed;
  return report;
}

// agree -----------------------------------------------------------------------

struct Quantity {
  std::string problem;
  std::string operation;
  std::vector<double> values;
};

/// Every derived quantity of the selected problems on one backend, at each
/// problem's base point and at one seeded perturbation of it.
template <AnyBackend B>
std::vector<Quantity> agreement_quantities(const B& ab, const RunSpec& spec) {
  std::vector<Quantity> out;
  std::mt19937_64 rng(spec.seed);
  for_each_problem([&](const auto& problem) {
    const std::vector<Args<double>> points{problem.point(), perturbed(problem.point(), rng)};
    if (!spec.problem.empty() && spec.problem != "all" && spec.problem != problem.name) return;

    const bool scalar_arguments = std::all_of(points[0].begin(), points[0].end(), [](const auto& x) {
      return x.is_scalar();
    });
    const std::string name(problem.name);
    Quantity derivative_q{name, "derivative", {}};
    Quantity gradient_q{name, "gradient", {}};
    Quantity jacobian_q{name, "jacobian", {}};
    Quantity hessian_q{name, "hessian", {}};
    const ScalarObjective<std::remove_cvref_t<decltype(problem)>> scalar_objective{problem};
    const auto packed = packed_objective(problem);
    for (const auto& xs : points) {
      if (scalar_arguments && !problem.vector_output) {
        for (double d : derivative(ab, problem, xs)) derivative_q.values.push_back(d);
      }
      for (const auto& g : gradient(ab, scalar_objective, xs)) append(gradient_q.values, g);
      for (const auto& block : jacobian(ab, problem, xs)) append(jacobian_q.values, block);
      append(hessian_q.values, hessian(ab, packed, pack(xs)));
    }
    if (!derivative_q.values.empty()) out.push_back(std::move(derivative_q));
    out.push_back(std::move(gradient_q));
    out.push_back(std::move(jacobian_q));
    out.push_back(std::move(hessian_q));
  });
  return out;
}

inline Outcome run_agree(const BackendSet& set, const RunSpec& spec) {
  Outcome outcome{report_header(spec), {}};
  outcome.report["tolerances"] = spec.tolerance ? Json{{"all_pairs", *spec.tolerance}}
                                                : Json{{"ad_ad", ad_ad_tolerance}, {"ad_fdm", ad_fdm_tolerance}};

  std::vector<std::vector<Quantity>> per_backend;
  for (const auto& name : spec.backends) {
    per_backend.push_back(set.visit(name, [&](const auto& ab) { return agreement_quantities(ab, spec); }));
  }

  for (std::size_t a = 0; a < spec.backends.size(); ++a) {
    for (std::size_t b = a + 1; b < spec.backends.size(); ++b) {
      const double tol = pair_tolerance(spec, spec.backends[a], spec.backends[b]);
      for (std::size_t q = 0; q < per_backend[a].size(); ++q) {
        const Quantity& qa = per_backend[a][q];
        const double worst = max_abs_difference(qa.values, per_backend[b][q].values);
        const bool ok = worst <= tol;
        outcome.report["results"].push_back(Json{{"problem", qa.problem},
                                                 {"operation", qa.operation},
                                                 {"backend_a", spec.backends[a]},
                                                 {"backend_b", spec.backends[b]},
                                                 {"max_discrepancy", worst},
                                                 {"tolerance", tol},
                                                 {"ok", ok}});
        if (!ok) {
          outcome.failures.push_back(qa.problem + " / " + qa.operation + " / " + spec.backends[a] + " vs " +
                                     spec.backends[b] + ": discrepancy " + format_number(worst) + " exceeds " +
                                     format_number(tol));
        }
      }
    }
  }
  return outcome;
}

// gauss-newton ----------------------------------------------------------------

inline Outcome run_gauss_newton(const BackendSet& set, const RunSpec& spec) {
  Outcome outcome{report_header(spec), {}};
  GaussNewtonConfig config;
  if (spec.tolerance) config.tolerance = *spec.tolerance;
  outcome.report["tolerances"] = Json{{"stationarity", config.tolerance},
                                      {"iterates_ad_ad", ad_ad_tolerance},
                                      {"iterates_ad_fdm", ad_fdm_tolerance}};

  std::vector<GaussNewtonState> states;
  for (const auto& name : spec.backends) {
    states.push_back(set.visit(name, [&](const auto& ab) {
      return with_residual_problem(spec.problem, [&](const auto& problem) { return gauss_newton(problem, ab, config); });
    }));
  }

  Json& results = outcome.report["results"];
  for (std::size_t b = 0; b < states.size(); ++b) {
    for (std::size_t k = 0; k < states[b].iterates.size(); ++k) {
      results.push_back(Json{{"backend", spec.backends[b]},
                             {"iteration", k},
                             {"objective", states[b].objective_values[k]},
                             {"x", to_json(states[b].iterates[k])}});
    }
  }
  for (std::size_t b = 0; b < states.size(); ++b) {
    const auto& s = states[b];
    const bool converged = s.termination == Termination::Converged;
    results.push_back(Json{{"backend", spec.backends[b]},
                           {"termination", std::string(to_string(s.termination))},
                           {"iterations", s.iterations()},
                           {"final_objective", s.objective_values.back()},
                           {"final_x", to_json(s.solution())},
                           {"step_length", s.step_length},
                           {"converged", converged}});
    if (!converged) {
      outcome.failures.push_back(spec.backends[b] + ": gauss-newton stopped with " +
                                 std::string(to_string(s.termination)));
    }
  }

  // Histories are compared over their common prefix plus the final iterates,
  // since backends may stop one step apart at the convergence threshold.
  for (std::size_t a = 0; a < states.size(); ++a) {
    for (std::size_t b = a + 1; b < states.size(); ++b) {
      const double tol = BackendSet::is_finite_difference(spec.backends[a]) ||
                                 BackendSet::is_finite_difference(spec.backends[b])
                             ? ad_fdm_tolerance
                             : ad_ad_tolerance;
      const auto& ha = states[a].iterates;
      const auto& hb = states[b].iterates;
      double worst = 0;
      for (std::size_t k = 0; k < std::min(ha.size(), hb.size()); ++k) {
        worst = std::max(worst, max_abs_difference(ha[k].data(), hb[k].data()));
      }
      worst = std::max(worst, max_abs_difference(ha.back().data(), hb.back().data()));
      const bool ok = worst <= tol;
      results.push_back(Json{{"backend_a", spec.backends[a]},
                             {"backend_b", spec.backends[b]},
                             {"max_iterate_discrepancy", worst},
                             {"tolerance", tol},
                             {"ok", ok}});
      if (!ok) {
        outcome.failures.push_back(spec.problem + " / iterates / " + spec.backends[a] + " vs " + spec.backends[b] +
                                   ": discrepancy " + format_number(worst) + " exceeds " + format_number(tol));
      }
    }
  }
  return outcome;
}

// newton ----------------------------------------------------------------------

inline Outcome run_newton(const BackendSet& set, const RunSpec& spec) {
  Outcome outcome{report_header(spec), {}};
  const double tol = spec.tolerance.value_or(1e-12);
  outcome.report["tolerances"] = Json{{"residual", tol}};

  for (const auto& name : spec.backends) {
    const auto [result, residual] = set.visit(name, [&](const auto& ab) {
      return with_root_problem(spec.problem, [&](const auto& f, const Value<double>& x0) {
        NewtonResult r = newton_raphson_root(f, x0, ab, tol);
        double norm = 0;
        for (double v : evaluate(f, Args<double>{r.root})) norm = std::max(norm, std::abs(v));
        return std::pair{r, norm};
      });
    });
    outcome.report["results"].push_back(Json{{"backend", name},
                                             {"root", to_json(result.root)},
                                             {"residual_norm", residual},
                                             {"iterations", result.iterations},
                                             {"converged", result.converged}});
    if (!result.converged) outcome.failures.push_back(name + ": newton did not converge");
  }
  return outcome;
}

// seedcount -------------------------------------------------------------------

/// Counts every call of the wrapped function, at any carrier type.
template <class F>
struct CountingFunction {
  F fn;
  std::shared_ptr<std::atomic<std::uint64_t>> calls = std::make_shared<std::atomic<std::uint64_t>>(0);

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    calls->fetch_add(1);
    return evaluate(fn, xs);
  }
};

/// Sum of the random map's outputs, the scalar function whose gradient is
/// counted.
struct SummedMap {
  RandomSmoothMap map;

  template <class S>
  Value<S> operator()(const Args<S>& xs) const {
    return sum(map(xs));
  }
};

template <AnyBackend B>
constexpr PrimitiveKind first_order_primitive() {
  if constexpr (HigherOrder<B>) {
    return first_order_primitive<std::remove_cvref_t<decltype(std::declval<B>().inner())>>();
  } else {
    return *B::primitive_kind;
  }
}

inline Outcome run_seedcount(const BackendSet& set, const RunSpec& spec) {
  Outcome outcome{report_header(spec), {}};
  const RandomSmoothMap map(spec.n, spec.m, spec.seed);
  std::mt19937_64 rng(spec.seed + 1);
  std::vector<double> x(spec.n);
  for (auto& v : x) v = uniform(rng, -1, 1);
  const Args<double> xs{Value<double>::vector(x)};

  auto record = [&](const std::string& backend, const std::string& operation, std::size_t m, const CallCounts& c,
                    std::uint64_t user_calls, std::uint64_t expected) {
    const std::uint64_t seeds = c.pushforward_calls + c.pullback_calls;
    const bool ok = seeds == expected;
    outcome.report["results"].push_back(Json{{"backend", backend},
                                             {"operation", operation},
                                             {"n", spec.n},
                                             {"m", m},
                                             {"pushforward_calls", c.pushforward_calls},
                                             {"pullback_calls", c.pullback_calls},
                                             {"closures_built", c.primitive_builds},
                                             {"engine_evaluations", c.function_evals},
                                             {"function_calls", user_calls},
                                             {"expected_seeds", expected},
                                             {"ok", ok}});
    if (!ok) {
      outcome.failures.push_back(backend + " / " + operation + ": " + std::to_string(seeds) + " seeds, expected " +
                                 std::to_string(expected));
    }
  };

  for (const auto& name : spec.backends) {
    set.visit(name, [&](const auto& ab) {
      using B = std::remove_cvref_t<decltype(ab)>;
      const bool forward = first_order_primitive<B>() == PrimitiveKind::Pushforward;

      reset_counts(ab);
      const CountingFunction<RandomSmoothMap> f{map};
      jacobian(ab, f, xs);
      record(name, "jacobian", spec.m, total_counts(ab), f.calls->load(), forward ? spec.n : spec.m);

      reset_counts(ab);
      const CountingFunction<SummedMap> g{SummedMap{map}};
      gradient(ab, g, xs);
      record(name, "gradient", 1, total_counts(ab), g.calls->load(), forward ? spec.n : 1);
    });
  }
  return outcome;
}

// list-backends ---------------------------------------------------------------

inline Outcome run_list_backends(const BackendSet& set, const RunSpec& spec) {
  Outcome outcome{report_header(spec), {}};
  for (const auto& name : spec.backends) {
    const BackendDescriptor& d = set.visit(name, [](const auto& ab) -> const BackendDescriptor& {
      return ab.descriptor();
    });
    std::string composition = "-";
    set.visit(name, [&](const auto& ab) {
      if constexpr (HigherOrder<decltype(ab)>) composition = ab.outer().name() + " over " + ab.inner().name();
    });
    outcome.report["results"].push_back(
        Json{{"name", d.name},
             {"mode", std::string(to_string(d.mode))},
             {"native_primitive", d.native_primitive ? std::string(to_string(*d.native_primitive)) : "-"},
             {"has_native_primal", d.has_native_primal},
             {"composition", composition}});
  }
  return outcome;
}

// entry point -----------------------------------------------------------------

inline std::vector<std::string> parse_backends(const std::string& text) {
  if (text == "all") return BackendSet::names();
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string name;
  while (std::getline(in, name, ',')) {
    const auto& known = BackendSet::names();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw UsageError("--backends", "unknown backend '" + name + "'");
    }
    if (std::find(out.begin(), out.end(), name) != out.end()) {
      throw UsageError("--backends", "backend '" + name + "' selected twice");
    }
    out.push_back(name);
  }
  if (out.empty()) throw UsageError("--backends", "no backend selected");
  return out;
}

inline void check_problem(const std::string& problem, const std::vector<std::string_view>& known) {
  if (std::find(known.begin(), known.end(), problem) == known.end()) {
    throw UsageError("--problem", "unknown problem '" + problem + "'");
  }
}

/// Validates a RunSpec before any computation; throws UsageError.
inline void validate(RunSpec& spec) {
  if (spec.command == "agree") {
    if (spec.problem.empty()) spec.problem = "all";
    if (spec.problem != "all") check_problem(spec.problem, problem_names());
  } else if (spec.command == "gauss-newton") {
    if (spec.problem.empty()) spec.problem = "rosenbrock";
    check_problem(spec.problem, residual_problem_names());
  } else if (spec.command == "newton") {
    if (spec.problem.empty()) spec.problem = "circle-diagonal";
    check_problem(spec.problem, root_problem_names());
  } else if (spec.command == "seedcount") {
    if (spec.n < 1 || spec.m < 1) throw UsageError("seedcount", "--n and --m must be at least 1");
  }
  if (spec.tolerance && !(*spec.tolerance > 0)) throw UsageError("--tol", "tolerance must be positive");
}

inline Outcome execute(const RunSpec& spec) {
  const BackendSet set;
  if (spec.command == "agree") return run_agree(set, spec);
  if (spec.command == "gauss-newton") return run_gauss_newton(set, spec);
  if (spec.command == "newton") return run_newton(set, spec);
  if (spec.command == "seedcount") return run_seedcount(set, spec);
  return run_list_backends(set, spec);
}

/// Runs one command line. Returns the process exit code: 0 success, 1
/// numerical or tolerance failure, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, bool color = false) {
  CLI::App app{"Cross-backend differentiation checks, solver demos and seed-count benchmarks", "adf"};
  RunSpec spec;
  std::string backends = "all";
  std::string format = "table";
  long long n = 10;
  long long m = 10;
  app.add_option("command", spec.command, "Command to run")->required()->check(CLI::IsMember(command_names()));
  app.add_option("--backends", backends, "Comma-separated backend names, or 'all'");
  app.add_option("--problem", spec.problem, "Problem from the built-in registry");
  app.add_option("--n", n, "Input dimension for seedcount");
  app.add_option("--m", m, "Output dimension for seedcount");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json"}));
  app.add_option("--seed", spec.seed, "Seed for randomized points and maps");
  app.add_option("--tol", spec.tolerance, "Tolerance override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ExitCode::Usage);
  }

  Outcome outcome;
  try {
    spec.json = format == "json";
    if (n < 1 || m < 1) throw UsageError("seedcount", "--n and --m must be at least 1");
    spec.n = static_cast<std::size_t>(n);
    spec.m = static_cast<std::size_t>(m);
    spec.backends = parse_backends(backends);
    validate(spec);
    outcome = execute(spec);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Usage);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::Failure);
  }

  if (spec.json) {
    write_json(out, outcome.report);
    out << "\n";
  } else {
    write_table(out, outcome.report, Style{color});
  }
  for (const auto& f : outcome.failures) err << "failure: " << f << "\n";
  return static_cast<int>(outcome.failures.empty() ? ExitCode::Success : ExitCode::Failure);
}

}  // namespace adf::cli

#pragma once

// Declarative experiments driven by a JSON configuration. Needs nlohmann/json
// (json.hpp) on the include path.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "plapdpp/plapdpp.hpp"

namespace plapdpp::experiments {

using Json = nlohmann::json;

enum class ExperimentKind {
  Solve,
  ConvergenceStudy,
  ConsistencyTable,
  MonotonicityCheck,
  ComparisonCheck,
  BarrierSuite,
  ModulusSuite,
};

struct ExperimentInfo {
  ExperimentKind kind;
  const char* name;
  const char* summary;
};

inline const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {ExperimentKind::Solve, "Solve", "value iteration per eps; checks convergence and the maximum principle"},
      {ExperimentKind::ConvergenceStudy, "ConvergenceStudy", "sup error against a reference for a decreasing eps list"},
      {ExperimentKind::ConsistencyTable, "ConsistencyTable", "scheme residual against the limit operator at fixed points"},
      {ExperimentKind::MonotonicityCheck, "MonotonicityCheck", "random trials of scheme monotonicity per average and flavor"},
      {ExperimentKind::ComparisonCheck, "ComparisonCheck", "comparison and maximum principles for random ordered data pairs"},
      {ExperimentKind::BarrierSuite, "BarrierSuite", "barrier constants, ring barrier identities and ring convergence"},
      {ExperimentKind::ModulusSuite, "ModulusSuite", "boundary modulus of continuity near sampled boundary points"},
  };
  return catalog;
}

inline const char* to_string(ExperimentKind k) {
  for (const auto& e : experiment_catalog())
    if (e.kind == k) return e.name;
  return "?";
}

/// Reads typed fields from a JSON tree; every failure is a ConfigError naming the field.
class Reader {
 public:
  explicit Reader(const Json& root) : root_(&root) {}

  const Json* find(const std::string& path) const {
    const Json* node = root_;
    std::size_t start = 0;
    while (start <= path.size()) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (node->is_array()) {
        std::size_t idx = 0;
        const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
        if (ec != std::errc{} || end != key.data() + key.size() || idx >= node->size()) return nullptr;
        node = &(*node)[idx];
      } else {
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &(*node)[key];
      }
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return node;
  }

  bool has(const std::string& path) const { return find(path) != nullptr; }

  const Json& at(const std::string& path) const {
    const Json* n = find(path);
    if (!n) fail(path, "missing");
    return *n;
  }

  double number(const std::string& path) const {
    const Json& n = at(path);
    if (!n.is_number()) fail(path, "expected a number");
    return n.get<double>();
  }
  double number(const std::string& path, double fallback) const {
    return has(path) ? number(path) : fallback;
  }

  long integer(const std::string& path) const {
    const Json& n = at(path);
    if (!n.is_number_integer()) fail(path, "expected an integer");
    return n.get<long>();
  }
  long integer(const std::string& path, long fallback) const {
    return has(path) ? integer(path) : fallback;
  }

  std::string text(const std::string& path) const {
    const Json& n = at(path);
    if (!n.is_string()) fail(path, "expected a string");
    return n.get<std::string>();
  }
  std::string text(const std::string& path, const std::string& fallback) const {
    return has(path) ? text(path) : fallback;
  }

  /// A number, or the string "inf".
  Exponent exponent(const std::string& path) const {
    const Json& n = at(path);
    if (n.is_string() && n.get<std::string>() == "inf") return Exponent::infinity();
    if (!n.is_number()) fail(path, "expected a number or \"inf\"");
    return n.get<double>();
  }

  Point<2> point(const std::string& path) const {
    const Json& n = at(path);
    if (!n.is_array() || n.size() != 2 || !n[0].is_number() || !n[1].is_number())
      fail(path, "expected [x, y]");
    return {n[0].get<double>(), n[1].get<double>()};
  }
  Point<2> point(const std::string& path, const Point<2>& fallback) const {
    return has(path) ? point(path) : fallback;
  }

  std::vector<double> numbers(const std::string& path) const {
    const Json& n = at(path);
    if (!n.is_array()) fail(path, "expected a list of numbers");
    std::vector<double> out;
    for (const auto& v : n) {
      if (!v.is_number()) fail(path, "expected a list of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::vector<Point<2>> points(const std::string& path) const {
    const Json& n = at(path);
    if (!n.is_array()) fail(path, "expected a list of [x, y] pairs");
    std::vector<Point<2>> out;
    for (const auto& v : n) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(path, "expected a list of [x, y] pairs");
      out.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    return out;
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& why) {
    throw Error(ErrorKind::ConfigError, "field '" + path + "': " + why);
  }

 private:
  const Json* root_;
};

// ----------------------------------------------------------------------------
// Parsing of the building blocks.

inline Domain<2> parse_domain(const Reader& r, const std::string& path) {
  const std::string kind = r.text(path + ".kind");
  try {
    if (kind == "Ball") return Domain<2>::ball(r.point(path + ".center", {0, 0}), r.number(path + ".radius"));
    if (kind == "Annulus")
      return Domain<2>::annulus(r.point(path + ".center", {0, 0}), r.number(path + ".r_inner"),
                                r.number(path + ".r_outer"));
    if (kind == "Square")
      return Domain<2>::square(r.point(path + ".center", {0, 0}), r.number(path + ".half_side"));
    if (kind == "LShape") return Domain<2>::lshape(r.number(path + ".half_side", 1.0));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    Reader::fail(path, e.what());
  }
  Reader::fail(path + ".kind", "unknown domain kind '" + kind + "'");
}

inline Average parse_average(const Reader& r, const std::string& path) {
  Average a;
  const std::string kind = r.text(path + ".kind");
  try {
    a.kind = average_kind_from_string(kind);
  } catch (const Error&) {
    Reader::fail(path + ".kind", "unknown average kind '" + kind + "'");
  }
  if (r.has(path + ".p")) a.p = r.exponent(path + ".p");
  a.quadrature_order = static_cast<int>(r.integer(path + ".quadrature_order", a.kind == AverageKind::Directional ? 2 : 1));
  a.direction_count = static_cast<int>(r.integer(path + ".direction_count", 32));
  a.disk_nodes = static_cast<int>(r.integer(path + ".disk_nodes", 33));
  try {
    return Average::validated(a);
  } catch (const Error& e) {
    Reader::fail(path, e.what());
  }
}

/// Named closed-form function; `smooth` is false for data that only needs values.
struct FunctionSpec {
  std::string name;
  std::function<double(const Point<2>&)> eval;
  std::optional<SmoothTestFunction<2>> smooth;
};

inline FunctionSpec parse_function(const Reader& r, const std::string& path) {
  const std::string kind = r.text(path + ".kind");
  auto from_smooth = [&](SmoothTestFunction<2> f) {
    FunctionSpec s{kind, f.eval, f};
    return s;
  };
  try {
    if (kind == "constant") {
      const double c = r.number(path + ".value");
      return from_smooth(affine_function<2>({0, 0}, c));
    }
    if (kind == "affine")
      return from_smooth(affine_function<2>(r.point(path + ".slope"), r.number(path + ".offset", 0.0)));
    if (kind == "squared_distance") return from_smooth(squared_distance<2>(r.point(path + ".center", {0, 0})));
    if (kind == "harmonic_quadratic") return from_smooth(harmonic_quadratic());
    if (kind == "bump_affine")
      return from_smooth(bump_affine<2>(r.point(path + ".slope", {1.0, 0.5}), r.number(path + ".offset", 0.0),
                                        r.point(path + ".center", {0.0, 0.0}), r.number(path + ".amplitude", 0.5),
                                        r.number(path + ".width", 0.5)));
    if (kind == "fundamental")
      return from_smooth(fundamental_solution<2>(r.exponent(path + ".p"), r.point(path + ".pole", {0, 0})));
    if (kind == "abs_sum") {
      const Point<2> w = r.point(path + ".weights", {1.0, 1.0});
      return FunctionSpec{kind, [w](const Point<2>& x) { return w[0] * std::abs(x[0]) + w[1] * std::abs(x[1]); },
                          std::nullopt};
    }
    if (kind == "wave") {
      const Point<2> k = r.point(path + ".frequency", {3.0, 2.0});
      const double phase = r.number(path + ".phase", 0.3);
      return FunctionSpec{kind,
                          [k, phase](const Point<2>& x) {
                            return std::sin(k[0] * x[0]) + 0.5 * std::cos(k[1] * x[1] + phase);
                          },
                          std::nullopt};
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    Reader::fail(path, e.what());
  }
  Reader::fail(path + ".kind", "unknown function kind '" + kind + "'");
}

inline BoundaryData<2> parse_boundary(const Reader& r, const std::string& path) {
  const FunctionSpec f = parse_function(r, path);
  const std::string ext = r.text(path + ".extension", "NearestBoundaryPoint");
  if (ext == "NearestBoundaryPoint") return BoundaryData<2>::nearest(f.eval);
  if (ext == "ClosedForm") return BoundaryData<2>::closed(f.eval);
  Reader::fail(path + ".extension", "expected NearestBoundaryPoint or ClosedForm");
}

inline HRule parse_h_rule(const Reader& r, const std::string& path) {
  if (!r.has(path)) return HRule::cubic();
  const std::string kind = r.text(path + ".kind");
  HRule rule;
  if (kind == "Cubic") rule = HRule::cubic();
  else if (kind == "Quadratic") rule = HRule::quadratic(r.number(path + ".factor", 1.0));
  else if (kind == "Fixed") rule = HRule::fixed(r.number(path + ".h"));
  else if (kind == "Ratio") rule = HRule::ratio(r.number(path + ".ratio"));
  else Reader::fail(path + ".kind", "expected Cubic, Quadratic, Fixed or Ratio");
  if (!(rule.value > 0.0)) Reader::fail(path, "parameter must be positive");
  return rule;
}

/// Validated experiment description.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Solve;
  Json tree;
  Domain<2> domain = Domain<2>::ball({0, 0}, 1.0);
  Average average;
  Flavor flavor = Flavor::HardBoundary;
  std::optional<FunctionSpec> boundary_spec;
  std::optional<BoundaryData<2>> boundary;
  std::vector<double> eps_list;
  HRule h_rule;
  std::optional<double> tol;
  std::optional<long> max_iters;
  std::optional<double> strip_width;
  std::string output_path;
  std::uint64_t seed = 0;

  Reader reader() const { return Reader(tree); }

  SolveOptions solve_options() const {
    SolveOptions o;
    o.tol = tol;
    o.max_iters = max_iters;
    return o;
  }
};

/// Stencil reach of an average at (eps, h), the minimum admissible strip width.
inline double stencil_reach(const Average& avg, double eps, double h) {
  if (avg.kind == AverageKind::FiveDiagLaplace) return h;
  if (avg.kind == AverageKind::Directional) return eps + std::sqrt(2.0) * h;
  return eps;
}

inline ExperimentConfig parse_config(const Json& tree) {
  if (!tree.is_object()) throw Error(ErrorKind::ConfigError, "configuration must be a JSON object");
  ExperimentConfig c;
  c.tree = tree;
  const Reader r(c.tree);
  const std::string name = r.text("experiment");
  bool known = false;
  for (const auto& e : experiment_catalog())
    if (name == e.name) {
      c.experiment = e.kind;
      known = true;
    }
  if (!known) Reader::fail("experiment", "unknown experiment '" + name + "'");

  if (r.has("domain")) c.domain = parse_domain(r, "domain");
  if (r.has("average")) c.average = parse_average(r, "average");
  if (r.has("flavor")) {
    try {
      c.flavor = flavor_from_string(r.text("flavor"));
    } catch (const Error&) {
      Reader::fail("flavor", "expected HardBoundary or DeltaWeighted");
    }
  }
  if (r.has("boundary")) {
    c.boundary_spec = parse_function(r, "boundary");
    c.boundary = parse_boundary(r, "boundary");
  }
  c.h_rule = parse_h_rule(r, "h_rule");
  if (r.has("eps_list")) c.eps_list = r.numbers("eps_list");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0.0 && c.eps_list[i] < 1.0)) Reader::fail("eps_list", "every eps must lie in (0, 1)");
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) Reader::fail("eps_list", "must be strictly decreasing");
  }
  if (r.has("tol")) {
    c.tol = r.number("tol");
    if (!(*c.tol > 0.0)) Reader::fail("tol", "must be positive");
  }
  if (r.has("max_iters")) {
    c.max_iters = r.integer("max_iters");
    if (*c.max_iters < 1) Reader::fail("max_iters", "must be at least 1");
  }
  if (r.has("strip_width")) {
    c.strip_width = r.number("strip_width");
    for (double eps : c.eps_list)
      if (*c.strip_width < stencil_reach(c.average, eps, c.h_rule(eps)) * (1.0 - 1e-12))
        Reader::fail("strip_width", "narrower than the stencil reach at eps = " + format_double(eps));
  }
  c.output_path = r.text("output_path", std::string(to_string(c.experiment)) + ".csv");
  const long seed = r.integer("seed", 0);
  if (seed < 0) Reader::fail("seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  auto need = [&](bool ok, const std::string& field) {
    if (!ok) Reader::fail(field, "required by " + name);
  };
  switch (c.experiment) {
    case ExperimentKind::Solve:
    case ExperimentKind::ConvergenceStudy:
    case ExperimentKind::ModulusSuite:
      need(r.has("domain"), "domain");
      need(r.has("average"), "average");
      need(c.boundary.has_value(), "boundary");
      need(!c.eps_list.empty(), "eps_list");
      break;
    case ExperimentKind::ConsistencyTable:
      need(r.has("average"), "average");
      need(r.has("function"), "function");
      need(r.has("points"), "points");
      need(!c.eps_list.empty(), "eps_list");
      break;
    case ExperimentKind::MonotonicityCheck:
      need(r.has("domain"), "domain");
      need(r.has("average") || r.has("averages"), "averages");
      need(!c.eps_list.empty(), "eps_list");
      break;
    case ExperimentKind::ComparisonCheck:
      need(r.has("domain"), "domain");
      need(r.has("average") || r.has("averages"), "averages");
      need(c.eps_list.size() == 1, "eps_list");
      break;
    case ExperimentKind::BarrierSuite:
      break;
  }
  if (c.experiment == ExperimentKind::ConvergenceStudy) {
    if (r.has("reference")) {
      (void)parse_function(r, "reference");
    } else if (!c.boundary_spec->smooth) {
      Reader::fail("reference", "required when the boundary function has no closed form");
    }
  }
  if (c.experiment == ExperimentKind::ConsistencyTable && !parse_function(r, "function").smooth)
    Reader::fail("function.kind", "consistency needs a smooth test function");
  return c;
}

/// Sets a dotted key of a JSON tree; the value is parsed as JSON when possible, else kept as text.
inline void apply_override(Json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorKind::ConfigError, "override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorKind::ConfigError, "override key '" + key + "' has an empty part");
    if (!node->is_object()) *node = Json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

// ----------------------------------------------------------------------------
// Running.

/// Tables and verdict of one experiment run.
struct Outcome {
  std::vector<std::pair<std::string, CsvTable>> tables;  ///< (path, table), written in order
  std::vector<std::string> failures;                    ///< human-readable violated properties
  std::optional<CsvTable> violations;                   ///< written next to the main output when non-empty

  bool passed() const { return failures.empty(); }
};

inline std::string sibling_path(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

inline DppProblem<2> make_problem(const ExperimentConfig& c, double eps) {
  DppProblem<2> prob{c.domain, c.average, c.flavor, eps, c.h_rule(eps), *c.boundary, {}, c.strip_width};
  if (c.average.kind == AverageKind::FiveDiagLaplace) prob.h = eps;
  return prob;
}

namespace detail {

inline double sup_error(const SolveResult<2>& r, const std::function<double(const Point<2>&)>& f) {
  double e = 0.0;
  for (std::size_t lin : r.u.interior()) e = std::max(e, std::abs(r.u.values()[lin] - f(r.u.point(lin))));
  for (std::size_t lin : r.u.collar()) e = std::max(e, std::abs(r.u.values()[lin] - f(r.u.point(lin))));
  return e;
}

inline std::vector<Average> average_list(const ExperimentConfig& c) {
  const Reader r = c.reader();
  if (!r.has("averages")) return {c.average};
  const Json& list = r.at("averages");
  if (!list.is_array() || list.empty()) Reader::fail("averages", "expected a non-empty list");
  std::vector<Average> out;
  for (std::size_t i = 0; i < list.size(); ++i) out.push_back(parse_average(r, "averages." + std::to_string(i)));
  return out;
}

}  // namespace detail

inline Outcome run_solve(const ExperimentConfig& c) {
  Outcome out;
  CsvTable t({"eps", "h", "nodes", "iterations", "update_norm", "tol", "converged", "g_min", "g_max",
              "max_principle_excess"});
  std::optional<SolveResult<2>> last;
  for (double eps : c.eps_list) {
    const auto prob = make_problem(c, eps);
    SolveResult<2> r;
    try {
      r = solve(prob, c.solve_options());
    } catch (const NotConvergedError<2>& e) {
      r = e.partial();
      out.failures.push_back("not converged at eps = " + format_double(eps));
    }
    const double excess = max_principle_excess(r);
    if (excess > 2.0 * r.tol)
      out.failures.push_back("maximum principle violated by " + format_double(excess) + " at eps = " +
                             format_double(eps));
    t.add_row({eps, prob.h, static_cast<long long>(r.u.interior().size() + r.u.collar().size()),
               static_cast<long long>(r.iterations), r.final_update_norm, r.tol,
               static_cast<long long>(r.converged), r.g_min, r.g_max, excess});
    last = std::move(r);
  }
  out.tables.emplace_back(c.output_path, t);
  const Reader r = c.reader();
  if (r.has("field_path")) out.tables.emplace_back(r.text("field_path"), field_table(last->u));
  if (r.has("grid_path")) write_grid(last->u, r.text("grid_path"));
  return out;
}

inline Outcome run_convergence(const ExperimentConfig& c) {
  Outcome out;
  const Reader r = c.reader();
  const auto reference = r.has("reference") ? parse_function(r, "reference").eval : c.boundary_spec->eval;
  CsvTable t({"eps", "h", "nodes", "iterations", "update_norm", "error", "order"});
  std::vector<double> errors;
  for (double eps : c.eps_list) {
    const auto prob = make_problem(c, eps);
    SolveResult<2> res;
    try {
      res = solve(prob, c.solve_options());
    } catch (const NotConvergedError<2>& e) {
      res = e.partial();
      out.failures.push_back("not converged at eps = " + format_double(eps));
    }
    const double err = detail::sup_error(res, reference);
    double order = std::numeric_limits<double>::quiet_NaN();
    if (!errors.empty()) order = std::log(errors.back() / err) / std::log(c.eps_list[errors.size() - 1] / eps);
    t.add_row({eps, prob.h, static_cast<long long>(res.u.interior().size() + res.u.collar().size()),
               static_cast<long long>(res.iterations), res.final_update_norm, err, order});
    errors.push_back(err);
  }
  for (std::size_t i = 1; i < errors.size(); ++i)
    if (!(errors[i] < errors[i - 1]))
      out.failures.push_back("error does not decrease from eps = " + format_double(c.eps_list[i - 1]) +
                             " to eps = " + format_double(c.eps_list[i]));
  if (r.has("max_final_ratio") && errors.size() >= 2) {
    const double ratio = errors.back() / errors[errors.size() - 2];
    if (!(ratio <= r.number("max_final_ratio")))
      out.failures.push_back("final error ratio " + format_double(ratio) + " above the configured bound");
  }
  out.tables.emplace_back(c.output_path, t);
  return out;
}

inline Outcome run_consistency(const ExperimentConfig& c) {
  Outcome out;
  const Reader r = c.reader();
  const auto phi = *parse_function(r, "function").smooth;
  const auto points = r.points("points");
  const double slack = r.number("residual_slack", 0.05);
  CsvTable t({"point", "x", "y", "eps", "h", "scheme", "target", "residual"});
  for (std::size_t k = 0; k < points.size(); ++k) {
    std::vector<ConsistencyRow> rows;
    try {
      rows = check_consistency(c.average, phi, points[k], c.eps_list, c.h_rule);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::VanishingGradient) Reader::fail("points", e.what());
      throw;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      t.add_row({static_cast<long long>(k), points[k][0], points[k][1], row.eps, row.h, row.scheme, row.target,
                 row.residual});
      if (i > 0 && !(row.residual <= (1.0 + slack) * rows[i - 1].residual))
        out.failures.push_back("residual grows at point " + std::to_string(k) + ", eps = " + format_double(row.eps));
    }
    if (r.has("final_bound")) {
      const double rel = r.number("final_bound.relative", 0.0);
      const double abs = r.number("final_bound.absolute", 0.0);
      const auto& last = rows.back();
      if (!(last.residual <= rel * std::abs(last.target) + abs))
        out.failures.push_back("final residual above the bound at point " + std::to_string(k));
    }
  }
  out.tables.emplace_back(c.output_path, t);
  return out;
}

inline Outcome run_monotonicity(const ExperimentConfig& c) {
  Outcome out;
  const Reader r = c.reader();
  const auto trials = static_cast<std::size_t>(r.integer("trials", 1000));
  std::vector<Flavor> flavors = {Flavor::HardBoundary, Flavor::DeltaWeighted};
  if (r.has("flavor")) flavors = {c.flavor};
  CsvTable t({"average", "flavor", "eps", "h", "trials", "violations"});
  CsvTable v({"average", "flavor", "trial", "x", "y", "s_lower", "s_upper"});
  const double eps0 = c.eps_list.front();
  for (const Average& avg : detail::average_list(c)) {
    const double h = c.h_rule(eps0);
    const double eps = avg.kind == AverageKind::FiveDiagLaplace ? h : eps0;
    for (Flavor fl : flavors) {
      const auto rep = check_monotone<2>(avg, fl, trials, c.seed, c.domain, h, eps);
      t.add_row({avg.name(), std::string(to_string(fl)), eps, h, static_cast<long long>(trials),
                 static_cast<long long>(rep.violations.size())});
      const auto layout = LatticeField<2>::build(c.domain, Lattice<2>(h, {0, 0}), eps, eps + 2 * h);
      for (const auto& viol : rep.violations) {
        const Point<2> x = layout.point(viol.node);
        v.add_row({avg.name(), std::string(to_string(fl)), static_cast<long long>(viol.trial), x[0], x[1],
                   viol.s_lower, viol.s_upper});
      }
      if (!rep.violations.empty())
        out.failures.push_back(std::to_string(rep.violations.size()) + " monotonicity violations for " +
                               avg.name() + " / " + to_string(fl));
    }
  }
  out.tables.emplace_back(c.output_path, t);
  if (!v.rows().empty()) out.violations = v;
  return out;
}

/// Smooth random data G1 and an ordered partner G2 = G1 + (non-negative smooth noise).
struct RandomPair {
  std::function<double(const Point<2>&)> lower;
  std::function<double(const Point<2>&)> upper;
};

inline RandomPair random_pair(CounterRng& rng) {
  double a[3], kx[3], ky[3], ph[3];
  for (int i = 0; i < 3; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    kx[i] = rng.uniform(-4.0, 4.0);
    ky[i] = rng.uniform(-4.0, 4.0);
    ph[i] = rng.uniform(0.0, 6.283185307179586);
  }
  const double scale = rng.uniform(0.0, 1.0);
  const double nx = rng.uniform(-4.0, 4.0);
  const double ny = rng.uniform(-4.0, 4.0);
  const double nph = rng.uniform(0.0, 6.283185307179586);
  auto lower = [=](const Point<2>& x) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += a[i] * std::sin(kx[i] * x[0] + ky[i] * x[1] + ph[i]);
    return s;
  };
  auto upper = [=](const Point<2>& x) {
    return lower(x) + scale * 0.5 * (1.0 + std::sin(nx * x[0] + ny * x[1] + nph));
  };
  return {lower, upper};
}

inline Outcome run_comparison(const ExperimentConfig& c) {
  Outcome out;
  const Reader r = c.reader();
  const long pairs = r.integer("pairs", 50);
  CsvTable t({"pair", "average", "iterations", "tol", "max_violation", "violations", "max_principle_excess"});
  CsvTable v({"pair", "average", "max_violation", "max_principle_excess", "tol"});
  CounterRng rng(c.seed);
  const auto averages = detail::average_list(c);
  for (long k = 0; k < pairs; ++k) {
    const RandomPair data = random_pair(rng);
    for (const Average& avg : averages) {
      ExperimentConfig local = c;
      local.average = avg;
      local.boundary = BoundaryData<2>::nearest(data.lower);
      const auto prob = make_problem(local, c.eps_list.front());
      const auto rep = check_comparison(prob, BoundaryData<2>::nearest(data.lower),
                                        BoundaryData<2>::nearest(data.upper), c.solve_options());
      t.add_row({static_cast<long long>(k), avg.name(), static_cast<long long>(rep.iterations), rep.tol,
                 rep.max_violation, static_cast<long long>(rep.violations), rep.max_principle_excess});
      if (rep.violations > 0 || rep.max_principle_excess > 2.0 * rep.tol) {
        v.add_row({static_cast<long long>(k), avg.name(), rep.max_violation, rep.max_principle_excess, rep.tol});
        out.failures.push_back("pair " + std::to_string(k) + " violates comparison or the maximum principle for " +
                               avg.name());
      }
    }
  }
  out.tables.emplace_back(c.output_path, t);
  if (!v.rows().empty()) out.violations = v;
  return out;
}

/// Residual of the ring barrier identities for one (mu, d, p); returns the largest one.
template <std::size_t D>
double ring_identity_residual(double mu, double p) {
  BarrierConfig<D> cfg;
  cfg.mu = mu;
  cfg.delta = 0.4;
  cfg.p = p;
  cfg.m = -0.25;
  cfg.M = 1.0;
  double worst = 0.0;
  const auto consts = barrier_constants(mu, D, p);
  for (int k : {1, 2, 3}) {
    cfg.k = k;
    const double Mk = 0.75;
    const auto u = ring_barrier(cfg, Mk);
    Point<D> dir{};
    dir[0] = 1.0;
    worst = std::max(worst, std::abs(u(cfg.z_k + cfg.inner_radius() * dir) - cfg.m));
    worst = std::max(worst, std::abs(u(cfg.z_k + cfg.outer_radius() * dir) - Mk));
    worst = std::max(worst, std::abs(u(cfg.z_k + (cfg.outer_radius() / 2.0) * dir) - (consts.a * Mk + consts.b * cfg.m)));
  }
  return worst;
}

inline Outcome run_barriers(const ExperimentConfig& c) {
  Outcome out;
  const Reader r = c.reader();
  CsvTable ids({"mu", "d", "p", "xi", "log_branch", "theta", "a_plus_b", "a_prime_plus_b_prime", "ring_residual"});
  const std::vector<double> mus = r.has("grid.mu") ? r.numbers("grid.mu")
                                                   : std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const std::vector<double> ps = r.has("grid.p") ? r.numbers("grid.p") : std::vector<double>{1.5, 2.0, 3.0, 5.0, 10.0};
  for (double mu : mus)
    for (double p : ps)
      for (std::size_t d : {2u, 3u}) {
        const auto k = barrier_constants(mu, d, p);
        const double resid = d == 2 ? ring_identity_residual<2>(mu, p) : ring_identity_residual<3>(mu, p);
        ids.add_row({mu, static_cast<long long>(d), p, k.xi, static_cast<long long>(k.log_branch), k.theta,
                     k.a + k.b, k.a_prime + k.b_prime, resid});
        if (!(k.theta > 0.0 && k.theta < 1.0)) out.failures.push_back("theta outside (0, 1)");
        if (std::abs(k.a + k.b - 1.0) > 1e-12 || std::abs(k.a_prime + k.b_prime - 1.0) > 1e-12)
          out.failures.push_back("barrier weights do not sum to one");
        if (resid > 1e-12) out.failures.push_back("ring barrier identity residual " + format_double(resid));
      }
  out.tables.emplace_back(c.output_path, ids);

  if (r.has("ring")) {
    BarrierConfig<2> cfg;
    cfg.mu = r.number("ring.mu", 0.5);
    cfg.delta = r.number("ring.delta", 0.8);
    cfg.p = r.number("ring.p", 3.0);
    cfg.k = static_cast<int>(r.integer("ring.k", 1));
    cfg.m = r.number("ring.m", 0.0);
    cfg.z_k = r.point("ring.center", {0, 0});
    const double Mk = r.number("ring.Mk", 1.0);
    const double eta = r.number("ring.eta", 0.1);
    const auto eps_list = r.numbers("ring.eps_list");
    const HRule rule = parse_h_rule(r, "ring.h_rule");
    Average avg = r.has("ring.average") ? parse_average(r, "ring.average") : Average::convex(cfg.p);
    const auto rows = verify_ring_convergence(cfg, Mk, eps_list, avg, rule, eta, c.solve_options());
    CsvTable rt({"k", "eps", "h", "iterations", "error", "gamma"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows[i];
      rt.add_row({static_cast<long long>(row.k), row.eps, row.h, static_cast<long long>(row.iterations), row.error,
                  row.gamma});
      if (i > 0 && !(row.error < rows[i - 1].error))
        out.failures.push_back("ring error does not decrease at eps = " + format_double(row.eps));
    }
    out.tables.emplace_back(sibling_path(c.output_path, ".rings.csv"), rt);
  }
  return out;
}

/// Default boundary sample points of the L-shape: the re-entrant corner plus seven more.
inline std::vector<Point<2>> lshape_samples(double a) {
  return {{0.0, 0.0}, {0.0, -a / 2}, {a / 2, 0.0}, {-a, 0.0}, {0.0, a}, {-a / 2, -a}, {a, a / 2}, {-a, -a}};
}

inline Outcome run_modulus(const ExperimentConfig& c) {
  Outcome out;
  const Reader r = c.reader();
  std::vector<Point<2>> ys;
  if (r.has("boundary_points")) {
    ys = r.points("boundary_points");
  } else if (const auto* l = std::get_if<Domain<2>::LShape>(&c.domain.shape())) {
    ys = lshape_samples(l->half_side);
  } else {
    Reader::fail("boundary_points", "required unless the domain is an LShape");
  }
  const double mu = r.number("mu", 0.4);
  const double delta = r.number("delta", 0.5);
  const double eta_factor = r.number("eta_factor", 0.1);
  const double tolerance_factor = r.number("tolerance_factor", 1.0);
  if (c.average.p.is_infinite()) Reader::fail("average.p", "the barrier needs a finite p");
  const double p = c.average.p.value();
  std::vector<double> probe = r.has("probe_radii") ? r.numbers("probe_radii") : std::vector<double>{};

  CsvTable t({"eps", "h", "y_x", "y_y", "kind", "radius", "nodes", "measured", "eta", "theta", "k0", "eps0",
              "applicable", "within_eta"});
  bool any_applicable = false;
  for (double eps : c.eps_list) {
    const auto prob = make_problem(c, eps);
    SolveResult<2> res;
    try {
      res = solve(prob, c.solve_options());
    } catch (const NotConvergedError<2>& e) {
      res = e.partial();
      out.failures.push_back("not converged at eps = " + format_double(eps));
    }
    const double osc = res.g_max - res.g_min;
    const double eta = eta_factor * osc;
    const auto plan = modulus_plan(eta, osc, mu, delta, 2, p);
    const bool applicable = eps <= plan.eps0;
    any_applicable = any_applicable || applicable;
    for (const auto& y : ys) {
      const double gy = c.boundary->g(y);
      auto add = [&](const char* kind, double radius, bool asserted) {
        const auto row = measure_modulus(res, y, gy, radius);
        const bool within = row.measured <= tolerance_factor * eta;
        t.add_row({eps, prob.h, y[0], y[1], std::string(kind), radius, static_cast<long long>(row.nodes),
                   row.measured, eta, plan.theta, static_cast<long long>(plan.k0), plan.eps0,
                   static_cast<long long>(asserted), static_cast<long long>(within)});
        if (asserted && !within)
          out.failures.push_back("modulus above eta at y = (" + format_double(y[0]) + ", " + format_double(y[1]) + ")");
      };
      add("theory", plan.radius, applicable);
      for (double pr : probe) add("probe", pr, false);
    }
  }
  if (!any_applicable)
    out.failures.push_back("no eps in the list is at or below eps0; the modulus bound cannot be tested");
  out.tables.emplace_back(c.output_path, t);
  return out;
}

/// Runs a validated experiment and returns its tables and verdict (nothing is written).
inline Outcome execute(const ExperimentConfig& c) {
  try {
    switch (c.experiment) {
      case ExperimentKind::Solve: return run_solve(c);
      case ExperimentKind::ConvergenceStudy: return run_convergence(c);
      case ExperimentKind::ConsistencyTable: return run_consistency(c);
      case ExperimentKind::MonotonicityCheck: return run_monotonicity(c);
      case ExperimentKind::ComparisonCheck: return run_comparison(c);
      case ExperimentKind::BarrierSuite: return run_barriers(c);
      case ExperimentKind::ModulusSuite: return run_modulus(c);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::StencilEscapesSupport || e.kind() == ErrorKind::InvalidInput ||
        e.kind() == ErrorKind::EmptyBall || e.kind() == ErrorKind::UnsupportedDimension ||
        e.kind() == ErrorKind::NonMonotoneOrder || e.kind() == ErrorKind::PEqualsD)
      throw Error(ErrorKind::ConfigError, e.what());
    throw;
  }
  throw Error(ErrorKind::ConfigError, "unhandled experiment");
}

/// Exit status of a run: 0 all properties hold, 2 a property is violated, 1 configuration error.
struct RunStatus {
  int exit_code = 0;
  std::vector<std::string> messages;
};

/// Executes and writes every table; the violation table goes to <output>.violations.csv.
inline RunStatus run(const ExperimentConfig& c) {
  RunStatus status;
  Outcome o;
  try {
    o = execute(c);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ConfigError) throw;
    status.exit_code = 1;
    status.messages.push_back(e.what());
    return status;
  }
  for (const auto& [path, table] : o.tables) table.write(path);
  if (o.violations) o.violations->write(sibling_path(c.output_path, ".violations.csv"));
  status.messages = o.failures;
  status.exit_code = o.passed() ? 0 : 2;
  return status;
}

}  // namespace plapdpp::experiments

// Acceptance run: one PASS/FAIL line per criterion, followed by indented detail.
// Every tolerance is fixed here; the exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "plapdpp/experiments.hpp"
#include "plapdpp/plapdpp.hpp"
#include "support.hpp"

using namespace plapdpp;
using plapdpp::testing::Combined;
using plapdpp::testing::RandomField;

namespace {

// Tolerances.
constexpr double kAxiomTol = 1e-12;
constexpr double kBoundaryIdentityTol = 1e-12;
constexpr double kHarmonicQuadraticTol = 1e-10;
constexpr double kHarmonicQuadraticSolveTol = 1e-14;
constexpr double kConsistencyRelative = 0.05;
constexpr double kConsistencyAbsolute = 1e-6;
constexpr double kConvergenceRatio = 0.8;
constexpr double kModulusEtaFactor = 0.1;

struct Verdict {
  bool pass = true;
  std::string summary;
  std::vector<std::string> detail;

  void note(std::string line) { detail.push_back(std::move(line)); }
  void fail(std::string line) {
    pass = false;
    detail.push_back("! " + std::move(line));
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Kind {
  Average avg;
  double h;
  double eps;
};

/// One representative of each of the seven average kinds.
std::vector<Kind> seven_kinds() {
  return {
      {Average::integral(), 0.1, 0.35},   {Average::supinf(), 0.1, 0.35},      {Average::convex(4.0), 0.1, 0.35},
      {Average::p_to_infty(), 0.1, 0.35}, {Average::directional(3.0), 0.1, 0.35},
      {Average::discrete(5.0), 0.1, 0.35}, {Average::five_diag(), 0.1, 0.1},
  };
}

double sup_error(const SolveResult<2>& r, const std::function<double(const Point<2>&)>& ref) {
  double e = 0.0;
  for (std::size_t lin : r.u.interior()) e = std::max(e, std::abs(r.u.values()[lin] - ref(r.u.point(lin))));
  for (std::size_t lin : r.u.collar()) e = std::max(e, std::abs(r.u.values()[lin] - ref(r.u.point(lin))));
  return e;
}

Verdict average_axioms() {
  Verdict v;
  const Index<2> o{0, 0};
  for (const auto& k : seven_kinds()) {
    const Averager<2> a(k.avg, k.h, k.eps);
    const Lattice<2> lat(k.h, {0, 0});
    const auto reach = a.reach();
    CounterRng rng(101);
    std::size_t stab = 0, mono = 0, affine = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const RandomField<2> u(lat, seed);
      double lo = 1e300, hi = -1e300;
      for (std::int64_t i = -reach; i <= reach; ++i)
        for (std::int64_t j = -reach; j <= reach; ++j) {
          lo = std::min(lo, u.value({i, j}));
          hi = std::max(hi, u.value({i, j}));
        }
      const double au = a(u, o);
      if (au < lo - kAxiomTol || au > hi + kAxiomTol) ++stab;

      const RandomField<2> bump(lat, seed + 1000003, 0.5, 0.5);
      const Combined w(u, bump, [](double x, double n) { return x + n; });
      if (!(au <= a(w, o) + kAxiomTol)) ++mono;

      const double lambda = rng.uniform(0.1, 4.0);
      const double shift = rng.uniform(-2.0, 2.0);
      const RandomField<2> s(lat, seed, lambda, shift);
      if (std::abs(a(s, o) - (lambda * au + shift)) > kAxiomTol) ++affine;
    }
    const std::string line = fmt("%-22s stability %zu  monotonicity %zu  affine %zu violations of 1000", k.avg.name().c_str(),
                                 stab, mono, affine);
    if (stab + mono + affine) v.fail(line);
    else v.note(line);
  }
  v.summary = "stability, monotonicity and affine invariance for seven kinds";
  return v;
}

Verdict reduction_identities() {
  Verdict v;
  const Lattice<2> lat(0.1, {0, 0});
  std::size_t bad2 = 0, bad_inf = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RandomField<2> f(lat, 7000 + seed, 3.0, 0.5);
    const Index<2> x{0, 0};
    const double eps = 0.2 + 0.03 * static_cast<double>(seed % 7);
    if (avg_p(f, x, eps, 2.0) != avg_integral(f, x, eps)) ++bad2;
    if (avg_p(f, x, eps, Exponent::infinity()) != avg_supinf(f, x, eps)) ++bad_inf;
  }
  v.summary = fmt("100 fields: p=2 mismatches %zu, p=inf mismatches %zu", bad2, bad_inf);
  v.pass = bad2 == 0 && bad_inf == 0;
  return v;
}

Verdict mvp_consistency() {
  Verdict v;
  const std::vector<Point<2>> points{{0.7, 0.0}, {0.1, 0.75}, {-0.6, 0.45}, {0.5, -0.55}, {-0.65, -0.4}};
  struct Entry {
    SmoothTestFunction<2> phi;
    std::vector<double> ps;
  };
  std::vector<Entry> corpus{
      {squared_distance<2>({0, 0}), {2, 3, 4}},
      {harmonic_quadratic(), {2, 3, 4}},
      {bump_affine<2>({0.8, -0.6}, 0.1, {0.2, 0.1}, 0.3, 0.5), {2, 3, 4}},
  };
  for (double p : {2.0, 3.0, 4.0}) corpus.push_back({fundamental_solution<2>(p, {0, 0}), {p}});

  std::size_t cases = 0, not_decreasing = 0, above_bound = 0, roundoff = 0, zero_target = 0;
  for (const auto& [phi, ps] : corpus)
    for (double p : ps)
      for (const auto& x : points) {
        const auto rows = check_consistency(Average::convex(p), phi, x, {0.2, 0.1, 0.05},
                                            [](double e) { return e * e * e; });
        ++cases;
        const bool decreasing = rows[1].residual < rows[0].residual && rows[2].residual < rows[1].residual;
        const double bound = kConsistencyRelative * std::abs(rows[2].target) + kConsistencyAbsolute;
        const bool within = rows[2].residual <= bound;
        not_decreasing += !decreasing;
        above_bound += !within;
        roundoff += !decreasing && rows[0].residual < 1e-12 && rows[1].residual < 1e-12 && rows[2].residual < 1e-12;
        zero_target += !within && std::abs(rows[2].target) < 1e-12;
        const std::string line =
            fmt("%-18s p=%g x=(%5.2f,%5.2f) target % .4e residuals %.3e %.3e %.3e bound %.3e%s%s", phi.name.c_str(), p,
                x[0], x[1], rows[2].target, rows[0].residual, rows[1].residual, rows[2].residual, bound,
                decreasing ? "" : " [not decreasing]", within ? "" : " [above bound]");
        if (decreasing && within) v.note(line);
        else v.fail(line);
      }
  v.note(fmt("non-decreasing with every residual below 1e-12 (round-off): %zu; above the bound with zero target: %zu",
             roundoff, zero_target));
  v.summary = fmt("%zu cases: %zu not strictly decreasing, %zu above the final bound", cases, not_decreasing,
                  above_bound);
  return v;
}

Verdict scheme_monotonicity() {
  Verdict v;
  const auto dom = Domain<2>::annulus({0, 0}, 0.5, 1.0);
  std::size_t total = 0, violations = 0;
  for (const auto& k : seven_kinds()) {
    const bool five = k.avg.kind == AverageKind::FiveDiagLaplace;
    const double eps = five ? 0.04 : 0.2;
    for (Flavor fl : {Flavor::HardBoundary, Flavor::DeltaWeighted}) {
      const auto rep = check_monotone<2>(k.avg, fl, 1000, 29, dom, 0.04, eps);
      total += rep.trials;
      violations += rep.violations.size();
      const std::string line = fmt("%-22s %-14s %zu trials, %zu violations", k.avg.name().c_str(),
                                   to_string(fl), rep.trials, rep.violations.size());
      if (rep.violations.empty()) v.note(line);
      else v.fail(line);
    }
  }
  v.summary = fmt("%zu trials, %zu violations", total, violations);
  return v;
}

Verdict exact_reproduction() {
  Verdict v;
  auto affine = [](const Point<2>& x) { return 0.7 * x[0] - 0.4 * x[1] + 0.2; };
  const auto dom = Domain<2>::annulus({0, 0}, 0.4, 1.0);
  double worst_ratio = 0.0;
  for (const auto& k : seven_kinds()) {
    const bool five = k.avg.kind == AverageKind::FiveDiagLaplace;
    for (Flavor fl : {Flavor::HardBoundary, Flavor::DeltaWeighted}) {
      DppProblem<2> prob{dom, k.avg, fl, five ? 0.05 : 0.2, 0.05, BoundaryData<2>::closed(affine), {}, {}};
      ValueIteration<2> vi(prob);
      std::vector<double> start(vi.layout().dense_size(), 0.0);
      for (std::size_t lin : vi.layout().support()) start[lin] = affine(vi.layout().point(lin));
      vi.initialize(InitKind::Given, start);
      const double tol = vi.default_tol();
      const bool converged = vi.run(tol, 10);
      const double err = sup_error(vi.result(tol), affine);
      worst_ratio = std::max(worst_ratio, err / tol);
      const std::string line = fmt("%-22s %-14s affine error %.3e (2 tol = %.3e)%s", k.avg.name().c_str(),
                                   to_string(fl), err, 2 * tol, converged ? "" : " [not converged]");
      if (converged && err <= 2 * tol) v.note(line);
      else v.fail(line);
    }
  }
  for (const Average& avg : {Average::integral(), Average::supinf(), Average::convex(3.0)}) {
    DppProblem<2> prob{Domain<2>::ball({0, 0}, 0.6), avg, Flavor::HardBoundary, 0.15, 0.05,
                       BoundaryData<2>::closed(affine), {}, {}};
    SolveOptions opts;
    opts.tol = 1e-13;
    const auto r = solve(prob, opts);
    v.note(fmt("%-22s from BoundaryInf, tol 1e-13: affine error %.3e after %ld sweeps", avg.name().c_str(),
               sup_error(r, affine), r.iterations));
  }
  auto quad = [](const Point<2>& x) { return x[0] * x[0] - x[1] * x[1]; };
  DppProblem<2> prob{Domain<2>::square({0, 0}, 1.0), Average::five_diag(), Flavor::HardBoundary, 0.05, 0.05,
                     BoundaryData<2>::closed(quad), {}, {}};
  SolveOptions opts;
  opts.tol = kHarmonicQuadraticSolveTol;
  const auto r = solve(prob, opts);
  const double qerr = sup_error(r, quad);
  const std::string line = fmt("FiveDiagLaplace square x1^2 - x2^2: error %.3e (limit %.0e)", qerr, kHarmonicQuadraticTol);
  if (qerr < kHarmonicQuadraticTol) v.note(line);
  else v.fail(line);
  v.summary = fmt("affine fixed point within %.2f tol for every average; harmonic quadratic error %.2e", worst_ratio,
                  qerr);
  return v;
}

Verdict comparison_principles() {
  Verdict v;
  const std::vector<std::pair<std::string, Domain<2>>> domains{{"Ball", Domain<2>::ball({0, 0}, 1.0)},
                                                               {"Annulus", Domain<2>::annulus({0, 0}, 0.5, 1.0)}};
  const std::vector<Average> averages{Average::convex(2.0), Average::convex(3.0), Average::supinf()};
  std::size_t checks = 0, bad = 0;
  for (const auto& [name, dom] : domains) {
    CounterRng rng(2024);
    double worst_violation = 0.0, worst_excess = 0.0;
    std::size_t local_bad = 0;
    for (int k = 0; k < 50; ++k) {
      const auto pair = experiments::random_pair(rng);
      for (const Average& avg : averages) {
        DppProblem<2> prob{dom, avg, Flavor::HardBoundary, 0.2, 0.05, BoundaryData<2>::nearest(pair.lower), {}, {}};
        const auto rep = check_comparison(prob, BoundaryData<2>::nearest(pair.lower),
                                          BoundaryData<2>::nearest(pair.upper));
        ++checks;
        worst_violation = std::max(worst_violation, rep.max_violation / rep.tol);
        worst_excess = std::max(worst_excess, rep.max_principle_excess / rep.tol);
        if (rep.violations > 0 || rep.max_principle_excess > 2 * rep.tol) {
          ++bad;
          ++local_bad;
          v.fail(fmt("%s pair %d %s: violation %.3e, excess %.3e, tol %.3e", name.c_str(), k, avg.name().c_str(),
                     rep.max_violation, rep.max_principle_excess, rep.tol));
        }
      }
    }
    v.note(fmt("%-8s 150 pairs: %zu failures; worst u1 - u2 %.2f tol, worst excursion %.2f tol", name.c_str(),
               local_bad, worst_violation, worst_excess));
  }
  v.pass = bad == 0;
  v.summary = fmt("%zu ordered pairs, %zu beyond 2 tol", checks, bad);
  return v;
}

/// Solutions shared by the convergence and flavor-agreement criteria.
struct AnnulusRun {
  double eps;
  SolveResult<2> u;
};

std::vector<AnnulusRun> annulus_runs(const Average& avg, Exponent p, Flavor fl, const std::vector<double>& eps_list) {
  const auto dom = Domain<2>::annulus({0, 0}, 0.5, 1.0);
  const auto ref = fundamental_solution<2>(p, {0, 0});
  std::vector<AnnulusRun> out;
  for (double eps : eps_list) {
    DppProblem<2> prob{dom, avg, fl, eps, HRule::quadratic(1.0)(eps), BoundaryData<2>::closed(ref.eval), {}, {}};
    out.push_back({eps, solve(prob)});
  }
  return out;
}

const std::vector<double> kStudyEps{0.2, 0.1, 0.05};

Verdict convergence(std::vector<AnnulusRun>& p3_hard) {
  Verdict v;
  struct Case {
    const char* label;
    Average avg;
    Exponent p;
  };
  for (const Case& c : {Case{"p=2", Average::convex(2.0), Exponent(2.0)}, Case{"p=3", Average::convex(3.0), Exponent(3.0)},
                        Case{"p=inf", Average::supinf(), Exponent::infinity()}}) {
    auto runs = annulus_runs(c.avg, c.p, Flavor::HardBoundary, kStudyEps);
    const auto ref = fundamental_solution<2>(c.p, {0, 0});
    std::vector<double> err;
    for (const auto& r : runs) err.push_back(sup_error(r.u, ref.eval));
    const bool decreasing = err[1] < err[0] && err[2] < err[1];
    const double ratio = err[2] / err[1];
    const std::string line = fmt("%-6s %-22s e = %.3e %.3e %.3e  e(0.05)/e(0.1) = %.3f  sweeps %ld %ld %ld", c.label,
                                 c.avg.name().c_str(), err[0], err[1], err[2], ratio, runs[0].u.iterations,
                                 runs[1].u.iterations, runs[2].u.iterations);
    if (decreasing && ratio <= kConvergenceRatio) v.note(line);
    else v.fail(line);
    if (c.avg.kind == AverageKind::ConvexP && c.p.value() == 3.0) p3_hard = std::move(runs);
  }
  v.summary = fmt("h = eps^2, ratio limit %.1f", kConvergenceRatio);
  return v;
}

Verdict lipschitz_modulus() {
  Verdict v;
  const auto dom = Domain<2>::lshape(1.0);
  auto g = [](const Point<2>& x) { return std::abs(x[0]) + 0.5 * std::abs(x[1]); };
  const auto ys = experiments::lshape_samples(1.0);
  const double mu = 0.4, delta = 0.5;
  bool any_applicable = false;
  for (double eps : {0.1, 0.05}) {
    DppProblem<2> prob{dom, Average::convex(3.0), Flavor::HardBoundary, eps, HRule::quadratic(1.0)(eps),
                       BoundaryData<2>::nearest(g), {}, {}};
    const auto r = solve(prob);
    const double osc = r.g_max - r.g_min;
    const double eta = kModulusEtaFactor * osc;
    const auto plan = modulus_plan(eta, osc, mu, delta, 2, 3.0);
    const bool applicable = eps <= plan.eps0;
    any_applicable = any_applicable || applicable;
    v.note(fmt("eps %.2f: eta %.3f, theta %.4f, k0 %d, radius %.3e, eps0 %.3e, applicable %s", eps, eta, plan.theta,
               plan.k0, plan.radius, plan.eps0, applicable ? "yes" : "no"));
    std::size_t theory_nodes = 0, probe_within = 0;
    double probe_worst = 0.0;
    for (const auto& y : ys) {
      const auto row = measure_modulus(r, y, g(y), plan.radius);
      theory_nodes += row.nodes;
      if (applicable && row.measured > eta) v.fail(fmt("y = (%g, %g): |u - G(y)| = %.3e > eta", y[0], y[1], row.measured));
      const auto probe = measure_modulus(r, y, g(y), 2 * eps);
      probe_worst = std::max(probe_worst, probe.measured);
      probe_within += probe.measured <= eta;
    }
    v.note(fmt("        lattice nodes within the theory radius: %zu; probe radius 2 eps: %zu of 8 within eta, worst %.3e",
               theory_nodes, probe_within, probe_worst));
  }
  if (!any_applicable) v.fail("no solvable eps lies at or below eps0");
  v.summary = "boundary modulus on the L-shape at eta = 0.1 osc(G)";
  return v;
}

Verdict barrier_identities() {
  Verdict v;
  std::size_t combos = 0, bad = 0;
  double worst = 0.0;
  for (double mu : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9})
    for (double p : {1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0})
      for (std::size_t d : {2u, 3u}) {
        const auto k = barrier_constants(mu, d, p);
        const double resid = d == 2 ? experiments::ring_identity_residual<2>(mu, p)
                                    : experiments::ring_identity_residual<3>(mu, p);
        ++combos;
        worst = std::max({worst, resid, std::abs(k.a + k.b - 1.0), std::abs(k.a_prime + k.b_prime - 1.0)});
        if (!(k.theta > 0.0 && k.theta < 1.0) || std::abs(k.a + k.b - 1.0) > kBoundaryIdentityTol ||
            std::abs(k.a_prime + k.b_prime - 1.0) > kBoundaryIdentityTol || resid > kBoundaryIdentityTol) {
          ++bad;
          v.fail(fmt("mu %g d %zu p %g: theta %.6f, a+b-1 %.2e, a'+b'-1 %.2e, ring residual %.2e", mu, d, p, k.theta,
                     k.a + k.b - 1.0, k.a_prime + k.b_prime - 1.0, resid));
        }
      }
  v.note(fmt("%zu (mu, d, p) combinations, %zu failing, worst identity residual %.2e", combos, bad, worst));

  BarrierConfig<2> cfg;
  cfg.mu = 0.5;
  cfg.delta = 0.8;
  cfg.p = 3.0;
  cfg.m = 0.0;
  cfg.k = 1;
  const auto rows = verify_ring_convergence(cfg, 1.0, {0.05, 0.025}, Average::convex(3.0), HRule::quadratic(5.0), 0.1);
  const bool decreasing = rows[1].error < rows[0].error;
  const std::string line =
      fmt("ring k=1 mu 0.5 delta 0.8 p 3, h = 5 eps^2: error %.3e (eps 0.05), %.3e (eps 0.025); gamma(0.1) = %.3e",
          rows[0].error, rows[1].error, rows[1].gamma);
  if (decreasing) v.note(line);
  else v.fail(line);
  v.summary = fmt("%zu combinations, ring error %s", combos, decreasing ? "decreasing" : "not decreasing");
  return v;
}

/// sup |G(x) - G(y)| over collar nodes x and points y with |x - y| <= r.
double data_modulus(const SolveResult<2>& s, const std::function<double(const Point<2>&)>& G, double r) {
  double w = 0.0;
  for (std::size_t lin : s.u.collar()) {
    const Point<2> x = s.u.point(lin);
    const double gx = G(x);
    for (int a = 0; a < 64; ++a) {
      const double t = 2.0 * std::numbers::pi * a / 64.0;
      for (double f : {0.25, 0.5, 0.75, 1.0})
        w = std::max(w, std::abs(G({x[0] + f * r * std::cos(t), x[1] + f * r * std::sin(t)}) - gx));
    }
  }
  return w;
}

Verdict flavor_agreement(const std::vector<AnnulusRun>& hard) {
  Verdict v;
  const auto G = fundamental_solution<2>(3.0, {0, 0});
  const auto weighted = annulus_runs(Average::convex(3.0), 3.0, Flavor::DeltaWeighted, kStudyEps);
  std::vector<double> diffs;
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    double d = 0.0;
    const auto& a = hard[i].u;
    const auto& b = weighted[i].u;
    for (std::size_t lin : a.u.interior()) d = std::max(d, std::abs(a.u.values()[lin] - b.u.values()[lin]));
    for (std::size_t lin : a.u.collar()) d = std::max(d, std::abs(a.u.values()[lin] - b.u.values()[lin]));
    const double omega = data_modulus(a, G.eval, 2 * hard[i].eps);
    diffs.push_back(d);
    const std::string line = fmt("eps %.2f: sup |u_hard - u_weighted| = %.3e, modulus of G over 2 eps = %.3e",
                                 hard[i].eps, d, omega);
    if (d <= omega) v.note(line);
    else v.fail(line);
  }
  const bool decreasing = diffs[1] < diffs[0] && diffs[2] < diffs[1];
  if (!decreasing) v.fail("difference does not decrease with eps");
  v.summary = "HardBoundary against DeltaWeighted, p = 3 on Annulus(0, 0.5, 1)";
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, auto&& criterion) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criterion();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %2d  %-28s %s  [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, name, v.summary.c_str(), secs);
    for (const auto& line : v.detail) std::printf("          %s\n", line.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };

  std::vector<AnnulusRun> p3_hard;
  report(1, "average axioms", average_axioms);
  report(2, "reduction identities", reduction_identities);
  report(3, "mean value consistency", mvp_consistency);
  report(4, "scheme monotonicity", scheme_monotonicity);
  report(5, "exact reproduction", exact_reproduction);
  report(6, "maximum and comparison", comparison_principles);
  report(7, "convergence study", [&] { return convergence(p3_hard); });
  report(8, "Lipschitz boundary modulus", lipschitz_modulus);
  report(9, "barrier identities", barrier_identities);
  report(10, "flavor agreement", [&] {
    if (p3_hard.size() != kStudyEps.size()) {
      Verdict v;
      v.fail("p = 3 HardBoundary runs unavailable");
      return v;
    }
    return flavor_agreement(p3_hard);
  });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

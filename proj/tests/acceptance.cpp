// Acceptance run: one PASS/FAIL line per criterion. Exit status 0 only if all pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "defcon/continuation.hpp"
#include "defcon/deflation.hpp"
#include "defcon/obstacle1d.hpp"
#include "defcon/problems.hpp"
#include "defcon/reformulate.hpp"

namespace {

using namespace defcon;

// Tolerances and slack factors.
constexpr double kRootTol = 1e-6;
constexpr double kPriceTol = 1e-3;
constexpr double kDecayRatio = 0.1;
constexpr double kDerivativeTol = 1e-5;
constexpr double kShermanMorrisonTol = 1e-10;
constexpr double kLinearMatchTol = 1e-10;
constexpr double kContactTol = 1e-4;
constexpr std::size_t kMeshSlack = 5;
constexpr double kResidualTol = 1e-12;
constexpr unsigned kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double dist_inf(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

SolverConfig config_for(const BenchmarkInfo& info) {
  SolverConfig c;
  c.line_search = info.line_search;
  return c;
}

DeflationSettings deflation(double power, double shift) {
  DeflationSettings d;
  d.power = power;
  d.shift = shift;
  return d;
}

SolutionSet benchmark_search(BenchmarkId id, double shift, std::optional<double> mu = std::nullopt,
                             std::optional<Vector> guess = std::nullopt) {
  const BenchmarkInfo& info = benchmark_info(id);
  auto system = reformulated_system(build(id, mu), info.ncp);
  return deflated_search(system, {guess.value_or(info.default_guess)}, deflation(info.power, shift),
                         config_for(info), SearchOptions{}, mu);
}

std::string iterations(const SolutionSet& set) {
  std::string s;
  for (const FoundRoot& r : set.roots) s += (s.empty() ? "" : "/") + std::to_string(r.iterations);
  return s.empty() ? "-" : s;
}

// Reference roots at the default parameter; Gerard has none in closed form.
std::vector<Vector> reference_roots(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::KojimaShindoh: return {{1, 0, 3, 0}, {std::sqrt(6.0) / 2, 0, 0, 0.5}};
    case BenchmarkId::Gould: return {{0.25, 0.5, 0, 0}, {0, 0.5, 0, 0}, {11.0 / 32, 15.0 / 32, 1.0 / 8, 0}};
    case BenchmarkId::Aggarwal:
      return {{0, 1.0 / 20, 1.0 / 10, 0}, {1.0 / 110, 4.0 / 110, 1.0 / 110, 4.0 / 110}, {1.0 / 10, 0, 0, 1.0 / 20}};
    case BenchmarkId::Gerard: return benchmark_search(BenchmarkId::Gerard, 1.0).points();
  }
  return {};
}

Outcome criterion1() {
  Outcome out;
  const SolutionSet set = benchmark_search(BenchmarkId::KojimaShindoh, 1.0);
  out.require(set.size() == 2, "expected 2 roots, got " + std::to_string(set.size()));
  const auto ref = reference_roots(BenchmarkId::KojimaShindoh);
  const std::size_t limits[] = {14, 24};
  for (std::size_t i = 0; i < std::min<std::size_t>(2, set.size()); ++i) {
    out.require(dist_inf(set.roots[i].z, ref[i]) <= kRootTol, "root " + std::to_string(i + 1) + " mismatch");
    out.require(set.roots[i].iterations <= limits[i], "root " + std::to_string(i + 1) + " iterations");
  }
  const SolutionSet unshifted = benchmark_search(BenchmarkId::KojimaShindoh, 0.0);
  out.require(unshifted.size() == 1, "sigma=0 expected 1 root, got " + std::to_string(unshifted.size()));
  out.note("sigma=1 roots " + std::to_string(set.size()) + " its " + iterations(set) + ", sigma=0 roots " +
           std::to_string(unshifted.size()));
  return out;
}

Outcome criterion2() {
  Outcome out;
  const SolutionSet set = benchmark_search(BenchmarkId::Gould, 1.0);
  const auto ref = reference_roots(BenchmarkId::Gould);
  out.require(set.size() == 3, "expected 3 roots, got " + std::to_string(set.size()));
  const std::size_t limits[] = {10, 14, 20};
  for (std::size_t i = 0; i < std::min<std::size_t>(3, set.size()); ++i) {
    out.require(dist_inf(set.roots[i].z, ref[i]) <= kRootTol, "root " + std::to_string(i + 1) + " mismatch");
    out.require(set.roots[i].iterations <= limits[i], "root " + std::to_string(i + 1) + " iterations");
  }
  out.note("roots " + std::to_string(set.size()) + " its " + iterations(set));
  return out;
}

Outcome criterion3() {
  Outcome out;
  const double mu0 = 1e-3;
  const SolutionSet initial = benchmark_search(BenchmarkId::Aggarwal, 1.0, mu0);
  out.require(initial.size() == 3, "search at mu=1e-3 from 0 found " + std::to_string(initial.size()) + " of 3 roots");

  const BenchmarkInfo& info = benchmark_info(BenchmarkId::Aggarwal);
  ContinuationPlan plan;
  plan.start = mu0;
  plan.end = 1.0;
  plan.steps = 50;
  plan.solver = config_for(info);
  plan.deflation = deflation(info.power, 1.0);
  SystemFamily family = [&](double mu) { return reformulated_system(build(BenchmarkId::Aggarwal, mu), info.ncp); };
  const SolutionSet end = continue_parameter(family, plan, initial);
  std::size_t matched = 0;
  for (const Vector& r : reference_roots(BenchmarkId::Aggarwal)) {
    const bool found = std::any_of(end.roots.begin(), end.roots.end(),
                                   [&](const FoundRoot& f) { return dist_inf(f.z, r) <= kRootTol; });
    if (found) ++matched;
  }
  out.require(matched == 3, "continuation matched " + std::to_string(matched) + " of 3 roots");

  // The continuation leg on its own, from the three exact roots at mu = 1e-3 (1000x the mu = 1 roots).
  SolutionSet exact;
  for (Vector r : reference_roots(BenchmarkId::Aggarwal)) {
    for (double& v : r) v *= 1000.0;
    FoundRoot f;
    f.z = std::move(r);
    f.parameter = mu0;
    exact.roots.push_back(std::move(f));
  }
  const SolutionSet leg = continue_parameter(family, plan, exact);
  const auto ref = reference_roots(BenchmarkId::Aggarwal);
  bool leg_ok = leg.size() == 3;
  for (std::size_t i = 0; leg_ok && i < 3; ++i) leg_ok = dist_inf(leg.roots[i].z, ref[i]) <= kRootTol;
  out.note("initial roots " + std::to_string(initial.size()) + ", roots at mu=1 " + std::to_string(end.size()) +
           " (" + std::to_string(matched) + "/3 matched); continuation from the exact mu=1e-3 roots " +
           (leg_ok ? "reproduces all 3" : "does not reproduce all 3"));
  return out;
}

Outcome criterion4() {
  Outcome out;
  const SolutionSet set = benchmark_search(BenchmarkId::Gerard, 1.0);
  const double prices[3][2] = {{1.2256, 2.0698}, {1.2478, 2.1564}, {1.2358, 2.1095}};
  out.require(set.size() == 3, "expected 3 equilibria, got " + std::to_string(set.size()));
  for (const auto& p : prices) {
    const bool found = std::any_of(set.roots.begin(), set.roots.end(), [&](const FoundRoot& r) {
      return std::abs(r.z[kGerardPrice1] - p[0]) <= kPriceTol && std::abs(r.z[kGerardPrice2] - p[1]) <= kPriceTol;
    });
    out.require(found, "price pair (" + fmt("%.4f", p[0]) + ", " + fmt("%.4f", p[1]) + ") missing");
  }
  std::string found;
  for (const FoundRoot& r : set.roots) {
    found += (found.empty() ? "" : " ") + std::string("(") + fmt("%.4f", r.z[kGerardPrice1]) + ", " +
             fmt("%.4f", r.z[kGerardPrice2]) + ")";
  }
  out.note("prices " + found + " its " + iterations(set));
  return out;
}

Vector random_unit(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<double> normal;
  Vector d(n);
  double s = 0.0;
  for (double& v : d) {
    v = normal(rng);
    s += v * v;
  }
  for (double& v : d) v /= std::sqrt(s);
  return d;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome criterion5() {
  Outcome out;
  std::mt19937 rng(kSeed);
  double worst_ratio = std::numeric_limits<double>::infinity();
  double worst_bound = std::numeric_limits<double>::infinity();
  std::size_t sequences = 0;
  std::size_t failing = 0;
  for (const BenchmarkInfo& info : benchmark_registry()) {
    auto system = reformulated_system(build(info.id), info.ncp);
    for (const Vector& r : reference_roots(info.id)) {
      for (double shift : {0.0, 1.0}) {
        DeflationState state(2.0, shift);
        state.add_root(r);
        for (int trial = 0; trial < 20; ++trial) {
          const Vector d = random_unit(rng, r.size());
          std::vector<double> values;
          for (int k = 3; k <= 18; ++k) {
            const double t = std::pow(10.0, -k / 3.0);
            Vector z = r;
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += t * d[i];
            const double v = norm2(deflated_residual(state, system.residual(z), z));
            values.push_back(v);
            // Lower bound of the form gamma * ||z - r||^(1 - p): v * t^(p - 1) stays away from zero.
            worst_bound = std::min(worst_bound, v * t);
          }
          const double ratio = *std::min_element(values.begin(), values.end()) / median(values);
          worst_ratio = std::min(worst_ratio, ratio);
          ++sequences;
          if (ratio < kDecayRatio) ++failing;
        }
      }
    }
  }
  out.require(failing == 0, std::to_string(failing) + " of " + std::to_string(sequences) +
                                " sequences have min < 0.1 * median");
  out.note("worst min/median " + fmt("%.3g", worst_ratio) + ", min over all points of ||alpha F|| * ||z - r|| = " +
           fmt("%.3g", worst_bound) + " (the deflated residual grows like 1/||z - r|| for p = 2)");
  return out;
}

// Central differences of g at z, with a kink check: forward and backward
// differences of the undeflated residual must agree.
std::optional<DenseMatrix> central_jacobian(const std::function<Vector(std::span<const double>)>& g,
                                            const std::function<Vector(std::span<const double>)>& phi,
                                            const Vector& z, double scale) {
  const std::size_t n = z.size();
  DenseMatrix jac(n, n);
  const Vector phi0 = phi(z);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(scale, std::abs(z[j]));
    Vector zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    const Vector pp = phi(zp), pm = phi(zm);
    for (std::size_t i = 0; i < n; ++i) {
      const double fwd = (pp[i] - phi0[i]) / h;
      const double bwd = (phi0[i] - pm[i]) / h;
      if (std::abs(fwd - bwd) > 1e-3 * (1.0 + std::abs(fwd))) return std::nullopt;
    }
    const Vector gp = g(zp), gm = g(zm);
    for (std::size_t i = 0; i < n; ++i) jac(i, j) = (gp[i] - gm[i]) / (2.0 * h);
  }
  return jac;
}

Outcome criterion6() {
  Outcome out;
  std::mt19937 rng(kSeed + 1);
  double worst_fd = 0.0;
  double worst_sm = 0.0;
  std::size_t points = 0;
  for (const BenchmarkInfo& info : benchmark_registry()) {
    auto system = reformulated_system(build(info.id), info.ncp);
    const auto roots = reference_roots(info.id);
    double extent = 0.0;
    for (const Vector& r : roots) extent = std::max(extent, norm_inf(r));
    const double scale = std::max(0.5 * extent, 0.05);
    for (double power : {1.0, 2.0}) {
      DeflationState state(power, 1.0);
      for (const Vector& r : roots) state.add_root(r);
      auto g = [&](std::span<const double> z) { return deflated_residual(state, system.residual(z), z); };
      std::uniform_real_distribution<double> offset(-scale, scale);
      std::size_t accepted = 0;
      for (int attempt = 0; accepted < 20 && attempt < 2000; ++attempt) {
        Vector z = roots[std::uniform_int_distribution<std::size_t>(0, roots.size() - 1)(rng)];
        for (double& v : z) v += offset(rng);
        if (state.min_distance(z) < 0.1 * scale) continue;
        const auto fd = central_jacobian(g, system.residual, z, scale);
        if (!fd) continue;
        ++accepted;
        const Vector phi = system.residual(z);
        const DeflatedDerivativeParts parts = deflated_derivative_parts(state, phi, z);
        DenseMatrix base = to_dense(system.derivative(z));
        DenseMatrix full = base;
        double max_entry = 0.0;
        double max_error = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
          for (std::size_t j = 0; j < z.size(); ++j) {
            base(i, j) *= parts.scale;
            full(i, j) = base(i, j) + parts.rank_one_u[i] * parts.rank_one_w[j];
            max_entry = std::max(max_entry, std::abs(full(i, j)));
            max_error = std::max(max_error, std::abs(full(i, j) - (*fd)(i, j)));
          }
        }
        worst_fd = std::max(worst_fd, max_error / max_entry);

        Vector b(z.size());
        std::normal_distribution<double> normal;
        for (double& v : b) v = normal(rng);
        const LuFactorization base_lu = lu_factor(base);
        const LuFactorization full_lu = lu_factor(full);
        if (base_lu.singular() || full_lu.singular()) continue;
        const Vector x_sm = solve_rank_one_update(base_lu, parts.rank_one_u, parts.rank_one_w, b);
        const Vector x_dense = full_lu.solve(b);
        worst_sm = std::max(worst_sm, dist_inf(x_sm, x_dense) / norm_inf(x_dense));
      }
      points += accepted;
      out.require(accepted == 20, info.slug.data() + std::string(": only ") + std::to_string(accepted) +
                                      " non-kink points");
    }
  }
  out.require(worst_fd <= kDerivativeTol, "finite-difference mismatch " + fmt("%.3g", worst_fd));
  out.require(worst_sm <= kShermanMorrisonTol, "Sherman-Morrison mismatch " + fmt("%.3g", worst_sm));
  out.note(std::to_string(points) + " points, worst relative FD error " + fmt("%.3g", worst_fd) +
           ", worst Sherman-Morrison vs dense " + fmt("%.3g", worst_sm));
  return out;
}

PathState beam_path(double load) {
  BeamProblem problem;
  problem.load = load;
  return path_follow(problem, {}, PathConfig{});
}

Outcome criterion7(const PathState& state) {
  Outcome out;
  const BeamProblem problem;
  const double alpha = problem.half_width;
  const auto& roots = state.solutions.roots;
  out.require(state.gamma == 1e6, "final gamma " + fmt("%g", state.gamma));
  out.require(roots.size() == 3, "expected 3 solutions, got " + std::to_string(roots.size()));
  out.require(state.gamma_steps() == 9, "gamma steps " + std::to_string(state.gamma_steps()));

  const BeamModel model(problem, state.mesh);
  const Vector linear = model.unconstrained_solution();
  bool inactive = false;
  bool touches_lower = false;
  bool touches_upper = false;
  double linear_gap = std::numeric_limits<double>::infinity();
  for (const FoundRoot& r : roots) {
    const Vector y = state.mesh.node_values(r.z);
    const double lo = *std::min_element(y.begin(), y.end());
    const double hi = *std::max_element(y.begin(), y.end());
    if (model.active_fraction(r.z) == 0.0 && std::max(-lo, hi) < alpha) {
      inactive = true;
      linear_gap = std::min(linear_gap, dist_inf(r.z, linear));
    }
    touches_lower = touches_lower || lo <= -alpha + kContactTol;
    touches_upper = touches_upper || hi >= alpha - kContactTol;
  }
  out.require(inactive, "no inactive solution");
  out.require(linear_gap <= kLinearMatchTol, "inactive vs linear solve " + fmt("%.3g", linear_gap));
  out.require(touches_lower, "no solution reaches -alpha");
  out.require(touches_upper, "no solution reaches +alpha");

  const std::size_t limits[] = {3, 18, 42};
  for (std::size_t i = 0; i < std::min<std::size_t>(3, roots.size()); ++i) {
    out.require(roots[i].iterations <= limits[i], "discovery " + std::to_string(i + 1) + " iterations");
  }
  out.require(!roots.empty() && roots[0].iterations == 1, "first solve did not converge in 1 iteration");

  const PathState low = beam_path(5.0);
  out.require(low.solutions.size() == 1, "P=5 gave " + std::to_string(low.solutions.size()) + " solutions");
  out.note("solutions " + std::to_string(roots.size()) + " at gamma " + fmt("%g", state.gamma) + ", discovery its " +
           iterations(state.solutions) + ", gamma steps " + std::to_string(state.gamma_steps()) +
           ", inactive vs linear " + fmt("%.2g", linear_gap) + ", P=5 solutions " +
           std::to_string(low.solutions.size()));
  return out;
}

Outcome criterion8(const PathState& state) {
  Outcome out;
  const std::size_t coarsest = state.history.front().elements;
  const std::size_t branches = state.solutions.size();
  std::vector<std::size_t> baseline(branches, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> worst(branches, 0);
  std::size_t levels = 0;
  std::size_t last_elements = 0;
  for (const PathStep& step : state.history) {
    if (step.step == 0) continue;
    out.require(step.branch_iterations.size() == branches, "branch count changed at step " + std::to_string(step.step));
    if (step.branch_iterations.size() != branches) continue;
    if (step.elements != last_elements) ++levels;
    last_elements = step.elements;
    for (std::size_t b = 0; b < branches; ++b) {
      if (step.elements == coarsest) baseline[b] = std::min(baseline[b], step.branch_iterations[b]);
      worst[b] = std::max(worst[b], step.branch_iterations[b]);
    }
  }
  std::string summary;
  for (std::size_t b = 0; b < branches; ++b) {
    out.require(baseline[b] != std::numeric_limits<std::size_t>::max(), "no coarsest-level re-solve");
    out.require(worst[b] <= baseline[b] + kMeshSlack, "branch " + std::to_string(b) + " grows with refinement");
    summary += (summary.empty() ? "" : ", ") + std::to_string(baseline[b]) + "->" + std::to_string(worst[b]);
  }
  out.note(std::to_string(levels) + " mesh levels, per-branch coarsest->max iterations " + summary);
  return out;
}

Outcome criterion9() {
  Outcome out;
  struct Case {
    BenchmarkId id;
    Vector z;
    Vector f;
  };
  const double s6 = std::sqrt(6.0);
  const std::vector<Case> cases = {
      {BenchmarkId::KojimaShindoh, {1, 0, 3, 0}, {0, 31, 0, 4}},
      {BenchmarkId::KojimaShindoh, {s6 / 2, 0, 0, 0.5}, {0, 2 + s6 / 2, 0, 0}},
      {BenchmarkId::Gould, {0.25, 0.5, 0, 0}, {0, 0, 0.25, 0.25}},
      {BenchmarkId::Gould, {0, 0.5, 0, 0}, {1, 0, 1, 0.5}},
      {BenchmarkId::Gould, {11.0 / 32, 15.0 / 32, 1.0 / 8, 0}, {0, 0, 0, 3.0 / 16}},
      {BenchmarkId::Aggarwal, {0, 1.0 / 20, 1.0 / 10, 0}, {2, 0, 0, 0.25}},
      {BenchmarkId::Aggarwal, {1.0 / 110, 4.0 / 110, 1.0 / 110, 4.0 / 110}, {0, 0, 0, 0}},
      {BenchmarkId::Aggarwal, {1.0 / 10, 0, 0, 1.0 / 20}, {0, 0.25, 2, 0}},
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Vector f = build(cases[i].id).evaluate(cases[i].z);
    const double err = dist_inf(f, cases[i].f);
    worst = std::max(worst, err);
    out.require(err <= kResidualTol, "evaluation " + std::to_string(i + 1) + " off by " + fmt("%.3g", err));
  }
  out.note(std::to_string(cases.size()) + " reference evaluations, worst error " + fmt("%.3g", worst));
  return out;
}

}  // namespace

int main() {
  const PathState beam = beam_path(BeamProblem{}.load);
  const std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6,
      [&] { return criterion7(beam); }, [&] { return criterion8(beam); }, criterion9,
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::printf("criterion %zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  }
  return all ? 0 : 1;
}

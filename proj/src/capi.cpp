#include "defcon/defcon.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "defcon/continuation.hpp"
#include "defcon/errors.hpp"
#include "defcon/obstacle1d.hpp"
#include "defcon/problems.hpp"
#include "defcon/reformulate.hpp"

struct defcon_result {
  std::size_t dimension = 0;
  defcon::SolutionSet set;
};

struct defcon_beam_result {
  defcon::BeamProblem problem;
  defcon::PathState state;
  std::vector<defcon_beam_solution_info> info;
};

namespace {

thread_local std::string last_error;

defcon_status fail(defcon_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

defcon_status map_code(defcon::ErrorCode code) {
  using defcon::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return DEFCON_ERR_INVALID_ARGUMENT;
    case ErrorCode::SingularMatrix: return DEFCON_ERR_SINGULAR_MATRIX;
    case ErrorCode::SingularUpdate: return DEFCON_ERR_SINGULAR_UPDATE;
    case ErrorCode::NonFiniteResidual: return DEFCON_ERR_NON_FINITE_RESIDUAL;
    case ErrorCode::DerivativeUnavailable: return DEFCON_ERR_DERIVATIVE_UNAVAILABLE;
    case ErrorCode::AtDeflatedRoot: return DEFCON_ERR_AT_DEFLATED_ROOT;
    case ErrorCode::UnknownBenchmark: return DEFCON_ERR_UNKNOWN_BENCHMARK;
    case ErrorCode::AllBranchesLost: return DEFCON_ERR_ALL_BRANCHES_LOST;
  }
  return DEFCON_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
defcon_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const defcon::Error& err) {
    return fail(map_code(err.code()), err.what());
  } catch (const std::bad_alloc&) {
    return fail(DEFCON_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& err) {
    return fail(DEFCON_ERR_INTERNAL, err.what());
  }
}

#define DEFCON_REQUIRE(cond, msg) \
  if (!(cond)) return fail(DEFCON_ERR_INVALID_ARGUMENT, msg)

defcon::NcpFunctionKind to_ncp(int ncp) {
  switch (ncp) {
    case DEFCON_NCP_FISCHER_BURMEISTER: return defcon::NcpFunctionKind::FischerBurmeister;
    case DEFCON_NCP_MINMAX: return defcon::NcpFunctionKind::MinMax;
  }
  throw defcon::Error(defcon::ErrorCode::InvalidArgument, "unknown NCP function " + std::to_string(ncp));
}

defcon::LineSearch to_line_search(int ls) {
  switch (ls) {
    case DEFCON_LINE_SEARCH_NONE: return defcon::LineSearch::None;
    case DEFCON_LINE_SEARCH_BACKTRACKING: return defcon::LineSearch::Backtracking;
    case DEFCON_LINE_SEARCH_CUBIC: return defcon::LineSearch::Cubic;
  }
  throw defcon::Error(defcon::ErrorCode::InvalidArgument, "unknown line search " + std::to_string(ls));
}

int from_line_search(defcon::LineSearch ls) {
  switch (ls) {
    case defcon::LineSearch::None: return DEFCON_LINE_SEARCH_NONE;
    case defcon::LineSearch::Backtracking: return DEFCON_LINE_SEARCH_BACKTRACKING;
    case defcon::LineSearch::Cubic: return DEFCON_LINE_SEARCH_CUBIC;
  }
  return DEFCON_LINE_SEARCH_NONE;
}

std::size_t to_max_roots(std::size_t n) { return n == 0 ? std::numeric_limits<std::size_t>::max() : n; }

void check_power_shift(double power, double shift) {
  if (!(power > 0.0) || !std::isfinite(power) || !(shift >= 0.0) || !std::isfinite(shift)) {
    throw defcon::Error(defcon::ErrorCode::InvalidArgument, "deflation needs p > 0 and sigma >= 0");
  }
}

defcon::SolverConfig to_solver(const defcon_search_settings& s) {
  defcon::SolverConfig c;
  c.atol = s.atol;
  c.rtol = s.rtol;
  c.max_iter = s.max_iter;
  c.line_search = to_line_search(s.line_search);
  c.validate();
  return c;
}

defcon::DeflationSettings to_deflation(const defcon_search_settings& s) {
  check_power_shift(s.power, s.shift);
  defcon::DeflationSettings d;
  d.power = s.power;
  d.shift = s.shift;
  return d;
}

defcon::SearchOptions to_search(std::size_t max_roots) {
  defcon::SearchOptions o;
  o.max_roots = to_max_roots(max_roots);
  return o;
}

std::optional<double> optional_mu(int has_mu, double mu) {
  if (!has_mu) return std::nullopt;
  return mu;
}

void fill_event(const defcon::Event& e, defcon_event* out) {
  out->kind = e.kind.c_str();
  out->step = e.step;
  out->branch = e.branch;
  out->status = e.status ? static_cast<int>(*e.status) : DEFCON_SOLVE_NONE;
  out->iterations = e.iterations;
  out->has_parameter = e.parameter ? 1 : 0;
  out->parameter = e.parameter.value_or(0.0);
}

}  // namespace

extern "C" {

const char* defcon_version(void) { return "0.1.0"; }

const char* defcon_last_error(void) { return last_error.c_str(); }

const char* defcon_status_string(defcon_status status) {
  switch (status) {
    case DEFCON_OK: return "ok";
    case DEFCON_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DEFCON_ERR_SINGULAR_MATRIX: return "singular matrix";
    case DEFCON_ERR_SINGULAR_UPDATE: return "singular rank-one update";
    case DEFCON_ERR_NON_FINITE_RESIDUAL: return "non-finite residual";
    case DEFCON_ERR_DERIVATIVE_UNAVAILABLE: return "derivative unavailable";
    case DEFCON_ERR_AT_DEFLATED_ROOT: return "at deflated root";
    case DEFCON_ERR_UNKNOWN_BENCHMARK: return "unknown benchmark";
    case DEFCON_ERR_ALL_BRANCHES_LOST: return "all branches lost";
    case DEFCON_ERR_OUT_OF_RANGE: return "index out of range";
    case DEFCON_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* defcon_solve_status_string(int status) {
  if (status < 0 || status > DEFCON_SOLVE_LINE_SEARCH_FAILED) return "None";
  return defcon::to_string(static_cast<defcon::SolveStatus>(status));
}

size_t defcon_benchmark_count(void) { return defcon::benchmark_registry().size(); }

defcon_status defcon_benchmark_slug(size_t index, const char** slug) {
  DEFCON_REQUIRE(slug, "slug output is null");
  const auto& reg = defcon::benchmark_registry();
  if (index >= reg.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "benchmark index out of range");
  *slug = reg[index].slug.data();
  return DEFCON_OK;
}

defcon_status defcon_benchmark_describe(const char* slug, const char** description, size_t* dimension,
                                        int* parameterized) {
  DEFCON_REQUIRE(slug, "slug is null");
  return guarded([&] {
    const auto& info = defcon::benchmark_info(defcon::parse_benchmark(slug));
    if (description) *description = info.description.data();
    if (dimension) *dimension = info.dimension;
    if (parameterized) *parameterized = info.parameterized ? 1 : 0;
    return DEFCON_OK;
  });
}

defcon_status defcon_benchmark_settings(const char* slug, defcon_search_settings* out) {
  DEFCON_REQUIRE(slug && out, "null argument");
  return guarded([&] {
    const auto& info = defcon::benchmark_info(defcon::parse_benchmark(slug));
    const defcon::SolverConfig solver;
    out->ncp = info.ncp == defcon::NcpFunctionKind::MinMax ? DEFCON_NCP_MINMAX : DEFCON_NCP_FISCHER_BURMEISTER;
    out->power = info.power;
    out->shift = info.shift;
    out->line_search = from_line_search(info.line_search);
    out->max_roots = 0;
    out->atol = solver.atol;
    out->rtol = solver.rtol;
    out->max_iter = solver.max_iter;
    return DEFCON_OK;
  });
}

defcon_status defcon_benchmark_guess(const char* slug, double* guess, size_t dimension) {
  DEFCON_REQUIRE(slug && guess, "null argument");
  return guarded([&] {
    const auto& info = defcon::benchmark_info(defcon::parse_benchmark(slug));
    DEFCON_REQUIRE(dimension == info.dimension, "dimension mismatch");
    std::copy(info.default_guess.begin(), info.default_guess.end(), guess);
    return DEFCON_OK;
  });
}

defcon_status defcon_benchmark_evaluate(const char* slug, int has_mu, double mu, const double* z, double* out,
                                        size_t dimension) {
  DEFCON_REQUIRE(slug && z && out, "null argument");
  return guarded([&] {
    const auto problem = defcon::build(defcon::parse_benchmark(slug), optional_mu(has_mu, mu));
    DEFCON_REQUIRE(dimension == problem.dimension(), "dimension mismatch");
    const defcon::Vector f = problem.evaluate({z, dimension});
    std::copy(f.begin(), f.end(), out);
    return DEFCON_OK;
  });
}

defcon_status defcon_benchmark_residual(const char* slug, int ncp, int has_mu, double mu, const double* z,
                                        double* out, size_t dimension) {
  DEFCON_REQUIRE(slug && z && out, "null argument");
  return guarded([&] {
    auto system = defcon::reformulated_system(defcon::build(defcon::parse_benchmark(slug), optional_mu(has_mu, mu)),
                                              to_ncp(ncp));
    DEFCON_REQUIRE(dimension == system.dimension, "dimension mismatch");
    const defcon::Vector r = system.residual({z, dimension});
    std::copy(r.begin(), r.end(), out);
    return DEFCON_OK;
  });
}

defcon_status defcon_solve(const char* slug, const defcon_search_settings* settings, const double* guess,
                           size_t dimension, int has_mu, double mu, defcon_result** out) {
  DEFCON_REQUIRE(slug && settings && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto id = defcon::parse_benchmark(slug);
    const auto& info = defcon::benchmark_info(id);
    defcon::Vector start = info.default_guess;
    if (guess) {
      DEFCON_REQUIRE(dimension == info.dimension, "guess has wrong dimension");
      start.assign(guess, guess + dimension);
    }
    const auto config = to_solver(*settings);
    const auto deflation = to_deflation(*settings);
    auto system = defcon::reformulated_system(defcon::build(id, optional_mu(has_mu, mu)), to_ncp(settings->ncp));
    std::optional<double> parameter;
    if (info.parameterized) parameter = has_mu ? mu : 1.0;
    auto result = std::make_unique<defcon_result>();
    result->dimension = info.dimension;
    result->set = defcon::deflated_search(system, {start}, deflation, config, to_search(settings->max_roots), parameter);
    *out = result.release();
    return DEFCON_OK;
  });
}

defcon_status defcon_continue(const char* slug, const defcon_search_settings* settings, double mu_start,
                              double mu_end, size_t steps, defcon_result** out) {
  DEFCON_REQUIRE(slug && settings && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto id = defcon::parse_benchmark(slug);
    const auto& info = defcon::benchmark_info(id);
    DEFCON_REQUIRE(info.parameterized, "benchmark has no continuation parameter");
    DEFCON_REQUIRE(steps >= 1, "need at least one continuation step");
    DEFCON_REQUIRE(std::isfinite(mu_start) && std::isfinite(mu_end), "parameter range must be finite");
    const auto ncp = to_ncp(settings->ncp);
    defcon::ContinuationPlan plan;
    plan.start = mu_start;
    plan.end = mu_end;
    plan.steps = steps;
    plan.solver = to_solver(*settings);
    plan.deflation = to_deflation(*settings);
    plan.search = to_search(settings->max_roots);
    defcon::SystemFamily family = [id, ncp](double mu) { return defcon::reformulated_system(defcon::build(id, mu), ncp); };
    const defcon::SolutionSet initial =
        defcon::deflated_search(family(mu_start), {info.default_guess}, plan.deflation, plan.solver, plan.search,
                                mu_start);
    if (initial.roots.empty()) {
      return fail(DEFCON_ERR_ALL_BRANCHES_LOST, "initial search found no roots");
    }
    auto result = std::make_unique<defcon_result>();
    result->dimension = info.dimension;
    result->set = defcon::continue_parameter(family, plan, initial);
    *out = result.release();
    return DEFCON_OK;
  });
}

void defcon_result_destroy(defcon_result* result) { delete result; }

size_t defcon_result_dimension(const defcon_result* result) { return result ? result->dimension : 0; }

size_t defcon_result_root_count(const defcon_result* result) { return result ? result->set.roots.size() : 0; }

defcon_status defcon_result_root(const defcon_result* result, size_t index, double* z, size_t dimension) {
  DEFCON_REQUIRE(result && z, "null argument");
  if (index >= result->set.roots.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "root index out of range");
  DEFCON_REQUIRE(dimension == result->dimension, "dimension mismatch");
  const auto& r = result->set.roots[index].z;
  std::copy(r.begin(), r.end(), z);
  return DEFCON_OK;
}

defcon_status defcon_result_root_info(const defcon_result* result, size_t index, defcon_root_info* out) {
  DEFCON_REQUIRE(result && out, "null argument");
  if (index >= result->set.roots.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "root index out of range");
  const auto& r = result->set.roots[index];
  out->iterations = r.iterations;
  out->residual_norm = r.residual_norm;
  out->has_parameter = r.parameter ? 1 : 0;
  out->parameter = r.parameter.value_or(0.0);
  return DEFCON_OK;
}

size_t defcon_result_event_count(const defcon_result* result) { return result ? result->set.events.size() : 0; }

defcon_status defcon_result_event(const defcon_result* result, size_t index, defcon_event* out) {
  DEFCON_REQUIRE(result && out, "null argument");
  if (index >= result->set.events.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "event index out of range");
  fill_event(result->set.events[index], out);
  return DEFCON_OK;
}

void defcon_beam_default_settings(defcon_beam_settings* out) {
  if (!out) return;
  const defcon::BeamProblem problem;
  const defcon::PathConfig config;
  out->bending = problem.bending;
  out->load = problem.load;
  out->density = problem.density;
  out->gravity = problem.gravity;
  out->length = problem.length;
  out->half_width = problem.half_width;
  out->gamma0 = config.gamma0;
  out->gamma_max = config.gamma_max;
  out->ratio = 0.0;
  out->initial_elements = config.initial_elements;
  out->power = config.power;
  out->shift = config.shift;
  out->max_roots = 0;
  out->atol = config.solver.atol;
  out->rtol = config.solver.rtol;
  out->max_iter = config.solver.max_iter;
  out->line_search = from_line_search(config.solver.line_search);
}

defcon_status defcon_beam_run(const defcon_beam_settings* settings, defcon_beam_result** out) {
  DEFCON_REQUIRE(settings && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    defcon::BeamProblem problem;
    problem.bending = settings->bending;
    problem.load = settings->load;
    problem.density = settings->density;
    problem.gravity = settings->gravity;
    problem.length = settings->length;
    problem.half_width = settings->half_width;
    defcon::PathConfig config;
    config.gamma0 = settings->gamma0;
    config.gamma_max = settings->gamma_max;
    if (settings->ratio != 0.0) config.ratio = settings->ratio;
    config.initial_elements = settings->initial_elements;
    check_power_shift(settings->power, settings->shift);
    config.power = settings->power;
    config.shift = settings->shift;
    config.search = to_search(settings->max_roots);
    config.solver.atol = settings->atol;
    config.solver.rtol = settings->rtol;
    config.solver.max_iter = settings->max_iter;
    config.solver.line_search = to_line_search(settings->line_search);

    auto result = std::make_unique<defcon_beam_result>();
    result->problem = problem;
    result->state = defcon::path_follow(problem, {}, config);
    const defcon::BeamModel model(problem, result->state.mesh);
    for (const auto& root : result->state.solutions.roots) {
      const defcon::Vector values = result->state.mesh.node_values(root.z);
      defcon_beam_solution_info info{};
      info.iterations = root.iterations;
      info.residual_norm = root.residual_norm;
      info.discovered_at_gamma = root.parameter.value_or(config.gamma0);
      info.active_fraction = model.active_fraction(root.z);
      info.min_value = *std::min_element(values.begin(), values.end());
      info.max_value = *std::max_element(values.begin(), values.end());
      result->info.push_back(info);
    }
    *out = result.release();
    return DEFCON_OK;
  });
}

void defcon_beam_result_destroy(defcon_beam_result* result) { delete result; }

double defcon_beam_result_gamma(const defcon_beam_result* result) { return result ? result->state.gamma : 0.0; }

size_t defcon_beam_result_elements(const defcon_beam_result* result) {
  return result ? result->state.mesh.elements() : 0;
}

size_t defcon_beam_result_dimension(const defcon_beam_result* result) {
  return result ? result->state.mesh.dof_count() : 0;
}

size_t defcon_beam_result_solution_count(const defcon_beam_result* result) {
  return result ? result->state.solutions.roots.size() : 0;
}

defcon_status defcon_beam_result_solution(const defcon_beam_result* result, size_t index, double* dofs,
                                          size_t dimension) {
  DEFCON_REQUIRE(result && dofs, "null argument");
  const auto& roots = result->state.solutions.roots;
  if (index >= roots.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "solution index out of range");
  DEFCON_REQUIRE(dimension == result->state.mesh.dof_count(), "dimension mismatch");
  std::copy(roots[index].z.begin(), roots[index].z.end(), dofs);
  return DEFCON_OK;
}

defcon_status defcon_beam_result_solution_info(const defcon_beam_result* result, size_t index,
                                               defcon_beam_solution_info* out) {
  DEFCON_REQUIRE(result && out, "null argument");
  if (index >= result->info.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "solution index out of range");
  *out = result->info[index];
  return DEFCON_OK;
}

defcon_status defcon_beam_result_profile(const defcon_beam_result* result, size_t index, double* x, double* y,
                                         double* dy, size_t nodes) {
  DEFCON_REQUIRE(result && x && y && dy, "null argument");
  const auto& roots = result->state.solutions.roots;
  if (index >= roots.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "solution index out of range");
  const auto& mesh = result->state.mesh;
  DEFCON_REQUIRE(nodes == mesh.elements() + 1, "node count mismatch");
  return guarded([&] {
    const defcon::Vector values = mesh.node_values(roots[index].z);
    const defcon::Vector slopes = mesh.node_slopes(roots[index].z);
    for (std::size_t k = 0; k < nodes; ++k) {
      x[k] = mesh.node(k);
      y[k] = values[k];
      dy[k] = slopes[k];
    }
    return DEFCON_OK;
  });
}

size_t defcon_beam_result_step_count(const defcon_beam_result* result) {
  return result ? result->state.history.size() : 0;
}

defcon_status defcon_beam_result_step(const defcon_beam_result* result, size_t index, defcon_beam_step_info* out) {
  DEFCON_REQUIRE(result && out, "null argument");
  if (index >= result->state.history.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "step index out of range");
  const auto& s = result->state.history[index];
  out->step = s.step;
  out->gamma = s.gamma;
  out->elements = s.elements;
  out->branches = s.branch_iterations.size();
  out->newcomers = s.newcomers;
  return DEFCON_OK;
}

defcon_status defcon_beam_result_step_iterations(const defcon_beam_result* result, size_t index, size_t* iterations,
                                                 size_t branches) {
  DEFCON_REQUIRE(result && (iterations || branches == 0), "null argument");
  if (index >= result->state.history.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "step index out of range");
  const auto& its = result->state.history[index].branch_iterations;
  DEFCON_REQUIRE(branches == its.size(), "branch count mismatch");
  std::copy(its.begin(), its.end(), iterations);
  return DEFCON_OK;
}

size_t defcon_beam_result_event_count(const defcon_beam_result* result) {
  return result ? result->state.solutions.events.size() : 0;
}

defcon_status defcon_beam_result_event(const defcon_beam_result* result, size_t index, defcon_event* out) {
  DEFCON_REQUIRE(result && out, "null argument");
  if (index >= result->state.solutions.events.size()) return fail(DEFCON_ERR_OUT_OF_RANGE, "event index out of range");
  fill_event(result->state.solutions.events[index], out);
  return DEFCON_OK;
}

}  // extern "C"

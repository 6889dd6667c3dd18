#include "defcon/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "defcon/errors.hpp"

namespace defcon {

namespace {

struct Evaluation {
  std::optional<SolveStatus> failure;
  Vector value;
  double norm = 0.0;
};

Evaluation evaluate(const ResidualFn& residual, std::span<const double> z) {
  Evaluation e;
  for (double v : z) {
    if (!std::isfinite(v)) {
      e.failure = SolveStatus::Diverged;
      return e;
    }
  }
  try {
    e.value = residual(z);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::AtDeflatedRoot) {
      e.failure = SolveStatus::DeflatedRootHit;
    } else if (err.code() == ErrorCode::NonFiniteResidual) {
      e.failure = SolveStatus::Diverged;
    } else {
      throw;
    }
    return e;
  }
  e.norm = norm2(e.value);
  if (!std::isfinite(e.norm)) e.failure = SolveStatus::Diverged;
  return e;
}

// Newton direction d with (scale * A + u w^T) d = -g.
std::optional<Vector> newton_direction(const LinearizedSystem& lin, std::span<const double> g,
                                       const SolverConfig& config) {
  const LuFactorization fac = lu_factor(lin.matrix, config.factor);
  if (fac.singular() || !(lin.scale != 0.0) || !std::isfinite(lin.scale)) return std::nullopt;
  Vector rhs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i] / lin.scale;
  if (lin.rank_one_u.empty() || lin.rank_one_w.empty()) return fac.solve(rhs);
  Vector u = lin.rank_one_u;
  for (double& v : u) v /= lin.scale;
  return solve_rank_one_update(fac, u, lin.rank_one_w, rhs, config.rank_one);
}

// Gradient of 0.5 ||G||^2: (scale * A + u w^T)^T g.
Vector gradient_of_merit(const LinearizedSystem& lin, std::span<const double> g) {
  Vector grad = multiply_transpose(lin.matrix, g);
  for (double& v : grad) v *= lin.scale;
  if (!lin.rank_one_u.empty() && !lin.rank_one_w.empty()) {
    const double c = dot(lin.rank_one_u, g);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += c * lin.rank_one_w[i];
  }
  return grad;
}

// Solves (H^T H + mu I) d = -grad with H = scale * A + u w^T and mu relative
// to max|H^T H|; used when H itself is singular.
std::optional<Vector> regularized_direction(const LinearizedSystem& lin, std::span<const double> grad,
                                            const SolverConfig& config) {
  DenseMatrix h = to_dense(lin.matrix);
  const std::size_t n = h.rows();
  const bool rank_one = !lin.rank_one_u.empty() && !lin.rank_one_w.empty();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      h(i, j) *= lin.scale;
      if (rank_one) h(i, j) += lin.rank_one_u[i] * lin.rank_one_w[j];
    }
  }
  DenseMatrix normal(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto hk = h.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (hk[i] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) normal(i, j) += hk[i] * hk[j];
    }
  }
  const double mu = config.singular_regularization * normal.max_abs();
  if (!(mu > 0.0) || !std::isfinite(mu)) return std::nullopt;
  for (std::size_t i = 0; i < n; ++i) normal(i, i) += mu;
  const LuFactorization fac = lu_factor(normal, config.factor);
  if (fac.singular()) return std::nullopt;
  Vector rhs(grad.begin(), grad.end());
  for (double& v : rhs) v = -v;
  return fac.solve(rhs);
}

// Minimizer of the quadratic (first backtrack) or cubic model of the merit
// function through m(0), m'(0) and the last one or two trial values.
double interpolated_step(double m0, double slope, double lambda, double m_lambda, double prev_lambda,
                         double prev_merit) {
  if (prev_lambda == 0.0 || !std::isfinite(prev_merit)) {
    return -slope * lambda * lambda / (2.0 * (m_lambda - m0 - slope * lambda));
  }
  const double r1 = m_lambda - m0 - slope * lambda;
  const double r2 = prev_merit - m0 - slope * prev_lambda;
  const double denom = lambda - prev_lambda;
  const double a = (r1 / (lambda * lambda) - r2 / (prev_lambda * prev_lambda)) / denom;
  const double b = (-prev_lambda * r1 / (lambda * lambda) + lambda * r2 / (prev_lambda * prev_lambda)) / denom;
  if (a == 0.0) return -slope / (2.0 * b);
  const double disc = b * b - 3.0 * a * slope;
  if (disc < 0.0) return 0.5 * lambda;
  if (b <= 0.0) return (-b + std::sqrt(disc)) / (3.0 * a);
  return -slope / (b + std::sqrt(disc));
}

}  // namespace

void SolverConfig::validate() const {
  if (!(atol > 0.0) || !(rtol > 0.0) || !(divergence_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SolverConfig: tolerances must be positive");
  }
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "SolverConfig: max_iter must be at least 1");
  if (!(backtracking.reduction > 0.0 && backtracking.reduction < 1.0) ||
      !(backtracking.sufficient_decrease > 0.0 && backtracking.sufficient_decrease < 0.5) ||
      !(backtracking.min_step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SolverConfig: invalid backtracking parameters");
  }
}

const char* to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::SingularJacobian: return "SingularJacobian";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::DeflatedRootHit: return "DeflatedRootHit";
    case SolveStatus::LineSearchFailed: return "LineSearchFailed";
  }
  return "Unknown";
}

SolveResult solve(const ResidualFn& residual, const LinearizationFn& linearize, std::span<const double> z0,
                  const SolverConfig& config) {
  config.validate();
  SolveResult result;
  result.solution.assign(z0.begin(), z0.end());

  Evaluation current = evaluate(residual, result.solution);
  if (current.failure) {
    result.status = *current.failure;
    result.residual_history.push_back(current.norm);
    return result;
  }
  result.residual_history.push_back(current.norm);
  const double threshold = std::max(config.atol, config.rtol * current.norm);

  for (;;) {
    if (current.norm <= threshold) {
      result.status = SolveStatus::Converged;
      return result;
    }
    if (current.norm > config.divergence_tol) {
      result.status = SolveStatus::Diverged;
      return result;
    }
    if (result.iterations >= config.max_iter) {
      result.status = SolveStatus::MaxIterations;
      return result;
    }

    std::optional<Vector> direction;
    std::optional<Vector> merit_gradient;
    try {
      const LinearizedSystem lin = linearize(result.solution);
      direction = newton_direction(lin, current.value, config);
      if (!direction && config.line_search != LineSearch::None && config.singular_regularization > 0.0) {
        merit_gradient = gradient_of_merit(lin, current.value);
        direction = regularized_direction(lin, *merit_gradient, config);
      }
    } catch (const Error& err) {
      switch (err.code()) {
        case ErrorCode::SingularMatrix:
        case ErrorCode::SingularUpdate: break;
        case ErrorCode::AtDeflatedRoot: result.status = SolveStatus::DeflatedRootHit; return result;
        case ErrorCode::NonFiniteResidual: result.status = SolveStatus::Diverged; return result;
        default: throw;
      }
    }
    if (!direction) {
      result.status = SolveStatus::SingularJacobian;
      return result;
    }

    Vector trial(result.solution.size());
    auto step_to = [&](double lambda) {
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = result.solution[i] + lambda * (*direction)[i];
      return evaluate(residual, trial);
    };

    Evaluation next;
    if (config.line_search == LineSearch::None) {
      next = step_to(1.0);
      if (next.failure) {
        result.solution = trial;
        ++result.iterations;
        result.residual_history.push_back(next.norm);
        result.status = *next.failure;
        return result;
      }
    } else {
      // Armijo on m = 0.5 ||G||^2; along the Newton direction m'(0) = -2 m.
      const double merit = 0.5 * current.norm * current.norm;
      const double slope = merit_gradient ? dot(*merit_gradient, *direction) : -2.0 * merit;
      if (!(slope < 0.0)) {
        result.status = SolveStatus::LineSearchFailed;
        return result;
      }
      const auto& bt = config.backtracking;
      double lambda = 1.0;
      double prev_lambda = 0.0;
      double prev_merit = 0.0;
      for (;;) {
        next = step_to(lambda);
        double trial_merit = std::numeric_limits<double>::infinity();
        if (!next.failure) {
          trial_merit = 0.5 * next.norm * next.norm;
          if (trial_merit <= merit + bt.sufficient_decrease * lambda * slope) break;
        }
        double proposal = bt.reduction * lambda;
        if (config.line_search == LineSearch::Cubic && std::isfinite(trial_merit)) {
          proposal = interpolated_step(merit, slope, lambda, trial_merit, prev_lambda, prev_merit);
          proposal = std::clamp(proposal, 0.1 * lambda, 0.5 * lambda);
        }
        prev_lambda = lambda;
        prev_merit = trial_merit;
        lambda = proposal;
        if (lambda < bt.min_step) {
          result.status = SolveStatus::LineSearchFailed;
          return result;
        }
      }
    }

    result.solution = trial;
    current = std::move(next);
    ++result.iterations;
    result.residual_history.push_back(current.norm);
  }
}

SolveResult solve(const NonlinearSystem& system, std::span<const double> z0, const SolverConfig& config) {
  auto linearize = [&system](std::span<const double> z) {
    LinearizedSystem lin;
    lin.matrix = system.derivative(z);
    return lin;
  };
  return solve(system.residual, linearize, z0, config);
}

}  // namespace defcon

#pragma once

// Linearized Zeidler beam in a channel |y| <= alpha:
//
//   min J(y) = int_0^L (B y''^2 - P y'^2) / 2 - rho g y   with y(0) = y(L) = 0,
//
// discretized with cubic Hermite elements. The constraint is replaced by the
// Moreau-Yosida penalty (gamma/2) int (y - alpha)_+^2 + (-alpha - y)_+^2 and
// gamma is driven to gamma_max, refining the mesh so that h <= 1/sqrt(gamma).

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "defcon/continuation.hpp"
#include "defcon/linalg.hpp"
#include "defcon/solver.hpp"

namespace defcon {

struct BeamProblem {
  double bending = 1.0;     // B
  double load = 10.4;       // P
  double density = 1.0;     // rho
  double gravity = 1.0;     // g
  double length = 1.0;      // L
  double half_width = 0.4;  // alpha

  // Throws Error(InvalidArgument) unless B, L, alpha > 0 and all fields are finite.
  void validate() const;
};

// Uniform mesh of [0, L] with (value, slope) DOFs per node. The value DOFs at
// x = 0 and x = L are pinned and eliminated, leaving 2m unknowns ordered
// slope_0, value_1, slope_1, ..., value_{m-1}, slope_{m-1}, slope_m.
class HermiteMesh1D {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  HermiteMesh1D(std::size_t elements, double length);

  std::size_t elements() const noexcept { return elements_; }
  double length() const noexcept { return length_; }
  double h() const noexcept { return length_ / static_cast<double>(elements_); }
  double node(std::size_t k) const noexcept { return h() * static_cast<double>(k); }
  std::size_t dof_count() const noexcept { return 2 * elements_; }

  std::size_t value_dof(std::size_t node) const noexcept;  // npos at the pinned ends
  std::size_t slope_dof(std::size_t node) const noexcept;

  // Uniform bisection.
  HermiteMesh1D refined() const;

  double value(std::span<const double> y, double x) const;
  double slope(std::span<const double> y, double x) const;
  Vector node_values(std::span<const double> y) const;
  Vector node_slopes(std::span<const double> y) const;

 private:
  std::size_t elements_;
  double length_;
};

// Exact transfer of a coarse Hermite function onto a nested finer mesh.
// Throws Error(InvalidArgument) unless fine.elements() is a multiple of coarse.elements().
Vector prolong(const HermiteMesh1D& coarse, std::span<const double> y, const HermiteMesh1D& fine);

// J'(y) v = v^T K y - v^T G y - v^T f, and M is the L2 mass matrix.
// All matrices have half bandwidth 3.
struct BeamSystem {
  BandMatrix stiffness;  // K = int B N_i'' N_j''
  BandMatrix geometric;  // G = int P N_i' N_j'
  BandMatrix mass;       // M = int N_i N_j
  Vector load;           // f = int rho g N_i
};

BeamSystem assemble_beam_system(const BeamProblem& problem, const HermiteMesh1D& mesh);

// Problem, mesh and assembled matrices; evaluates the penalized residual and
// its Newton derivative. The penalty is evaluated at 4 Gauss points per
// element, and a point with |y| == alpha counts as inactive.
class BeamModel {
 public:
  BeamModel(BeamProblem problem, HermiteMesh1D mesh);

  const BeamProblem& problem() const noexcept { return problem_; }
  const HermiteMesh1D& mesh() const noexcept { return mesh_; }
  const BeamSystem& system() const noexcept { return system_; }

  Vector residual(double gamma, std::span<const double> y) const;
  BandMatrix derivative(double gamma, std::span<const double> y) const;
  double energy(double gamma, std::span<const double> y) const;
  // Fraction of quadrature points with |y| > alpha.
  double active_fraction(std::span<const double> y) const;
  // Solves (K - G) y = f with three sweeps of iterative refinement.
  Vector unconstrained_solution() const;
  // sqrt(n) * ||K - G||_inf * alpha * machine epsilon: the size of
  // ||residual||_2 produced by rounding y alone.
  double roundoff_scale() const;

 private:
  BeamProblem problem_;
  HermiteMesh1D mesh_;
  BeamSystem system_;
  BandMatrix operator_;  // K - G
};

Vector moreau_yosida_residual(const BeamProblem& problem, const HermiteMesh1D& mesh, double gamma,
                              std::span<const double> y);
BandMatrix moreau_yosida_derivative(const BeamProblem& problem, const HermiteMesh1D& mesh, double gamma,
                                    std::span<const double> y);

NonlinearSystem beam_nonlinear_system(std::shared_ptr<const BeamModel> model, double gamma);

struct PathConfig {
  double gamma0 = 10.0;
  double gamma_max = 1e6;
  // gamma_{k+1} = ratio * gamma_k; unset means (gamma_max / gamma0)^(1/9).
  std::optional<double> ratio;
  std::size_t initial_elements = 64;
  double power = 2.0;
  double shift = 1.0;
  SolverConfig solver;
  SearchOptions search;
  // On each mesh the solver's atol is raised to roundoff_factor * roundoff_scale().
  double roundoff_factor = 0.5;

  double effective_ratio() const;
  void validate() const;
};

struct PathStep {
  std::size_t step = 0;
  double gamma = 0.0;
  std::size_t elements = 0;
  std::vector<std::size_t> branch_iterations;  // re-solve iterations of each surviving branch
  std::size_t newcomers = 0;
};

struct PathState {
  double gamma = 0.0;
  double gamma_max = 0.0;
  HermiteMesh1D mesh{1, 1.0};
  SolutionSet solutions;  // parameter = gamma at discovery
  std::vector<PathStep> history;  // history[0] is the initial search

  std::size_t gamma_steps() const noexcept { return history.empty() ? 0 : history.size() - 1; }
};

// Deflated search at gamma0 from `guesses` (zero if empty) with L2 deflation,
// then path-following in gamma: refine until h <= 1/sqrt(gamma), prolong every
// branch, re-solve, and search for newcomers from the prolonged branches.
// Throws Error(AllBranchesLost).
PathState path_follow(const BeamProblem& problem, const std::vector<Vector>& guesses, const PathConfig& config);

}  // namespace defcon

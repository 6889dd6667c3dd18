#include "defcon/obstacle1d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "defcon/errors.hpp"

namespace defcon {

namespace {

constexpr std::size_t kHalfBandwidth = 3;

struct GaussPoint {
  double t;  // on [0, 1]
  double w;
};

constexpr std::array<GaussPoint, 4> kGauss = {{
    {0.5 * (1.0 - 0.8611363115940526), 0.5 * 0.3478548451374538},
    {0.5 * (1.0 - 0.3399810435848563), 0.5 * 0.6521451548625461},
    {0.5 * (1.0 + 0.3399810435848563), 0.5 * 0.6521451548625461},
    {0.5 * (1.0 + 0.8611363115940526), 0.5 * 0.3478548451374538},
}};

// Hermite shape functions on an element of size h, local order
// (value left, slope left, value right, slope right), and their x-derivatives.
struct Shape {
  std::array<double, 4> n;
  std::array<double, 4> dn;
  std::array<double, 4> ddn;
};

Shape shape(double t, double h) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  Shape s;
  s.n = {1.0 - 3.0 * t2 + 2.0 * t3, h * (t - 2.0 * t2 + t3), 3.0 * t2 - 2.0 * t3, h * (t3 - t2)};
  s.dn = {(6.0 * t2 - 6.0 * t) / h, 1.0 - 4.0 * t + 3.0 * t2, (6.0 * t - 6.0 * t2) / h, 3.0 * t2 - 2.0 * t};
  s.ddn = {(12.0 * t - 6.0) / (h * h), (6.0 * t - 4.0) / h, (6.0 - 12.0 * t) / (h * h), (6.0 * t - 2.0) / h};
  return s;
}

std::array<std::size_t, 4> element_dofs(const HermiteMesh1D& mesh, std::size_t e) {
  return {mesh.value_dof(e), mesh.slope_dof(e), mesh.value_dof(e + 1), mesh.slope_dof(e + 1)};
}

std::array<double, 4> gather(const std::array<std::size_t, 4>& dofs, std::span<const double> y) {
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = dofs[i] == HermiteMesh1D::npos ? 0.0 : y[dofs[i]];
  return out;
}

double dot4(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

void check_dimension(const HermiteMesh1D& mesh, std::span<const double> y) {
  if (y.size() != mesh.dof_count()) throw Error(ErrorCode::InvalidArgument, "beam: DOF vector has wrong size");
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidArgument, "beam: penalty parameter must be finite and non-negative");
  }
}

// Penalty value (y - alpha)_+ - (-alpha - y)_+ and its derivative; |y| == alpha is inactive.
std::pair<double, double> penalty(double y, double alpha) {
  if (y > alpha) return {y - alpha, 1.0};
  if (y < -alpha) return {y + alpha, 1.0};
  return {0.0, 0.0};
}

}  // namespace

void BeamProblem::validate() const {
  for (double v : {bending, load, density, gravity, length, half_width}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "beam: parameters must be finite");
  }
  if (!(bending > 0.0) || !(length > 0.0) || !(half_width > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "beam: B, L and alpha must be positive");
  }
}

HermiteMesh1D::HermiteMesh1D(std::size_t elements, double length) : elements_(elements), length_(length) {
  if (elements_ < 1) throw Error(ErrorCode::InvalidArgument, "mesh: need at least one element");
  if (!(length_ > 0.0) || !std::isfinite(length_)) {
    throw Error(ErrorCode::InvalidArgument, "mesh: length must be positive");
  }
}

std::size_t HermiteMesh1D::value_dof(std::size_t node) const noexcept {
  if (node == 0 || node >= elements_) return npos;
  return 2 * node - 1;
}

std::size_t HermiteMesh1D::slope_dof(std::size_t node) const noexcept {
  if (node > elements_) return npos;
  return node == elements_ ? 2 * node - 1 : 2 * node;
}

HermiteMesh1D HermiteMesh1D::refined() const { return HermiteMesh1D(2 * elements_, length_); }

double HermiteMesh1D::value(std::span<const double> y, double x) const {
  check_dimension(*this, y);
  const double scaled = std::clamp(x / h(), 0.0, static_cast<double>(elements_));
  const std::size_t e = std::min(static_cast<std::size_t>(scaled), elements_ - 1);
  return dot4(shape(scaled - static_cast<double>(e), h()).n, gather(element_dofs(*this, e), y));
}

double HermiteMesh1D::slope(std::span<const double> y, double x) const {
  check_dimension(*this, y);
  const double scaled = std::clamp(x / h(), 0.0, static_cast<double>(elements_));
  const std::size_t e = std::min(static_cast<std::size_t>(scaled), elements_ - 1);
  return dot4(shape(scaled - static_cast<double>(e), h()).dn, gather(element_dofs(*this, e), y));
}

Vector HermiteMesh1D::node_values(std::span<const double> y) const {
  check_dimension(*this, y);
  Vector out(elements_ + 1, 0.0);
  for (std::size_t k = 1; k < elements_; ++k) out[k] = y[value_dof(k)];
  return out;
}

Vector HermiteMesh1D::node_slopes(std::span<const double> y) const {
  check_dimension(*this, y);
  Vector out(elements_ + 1);
  for (std::size_t k = 0; k <= elements_; ++k) out[k] = y[slope_dof(k)];
  return out;
}

Vector prolong(const HermiteMesh1D& coarse, std::span<const double> y, const HermiteMesh1D& fine) {
  check_dimension(coarse, y);
  if (fine.elements() % coarse.elements() != 0 || fine.length() != coarse.length()) {
    throw Error(ErrorCode::InvalidArgument, "prolong: meshes are not nested");
  }
  const std::size_t ratio = fine.elements() / coarse.elements();
  Vector out(fine.dof_count(), 0.0);
  for (std::size_t e = 0; e < coarse.elements(); ++e) {
    const auto local = gather(element_dofs(coarse, e), y);
    const std::size_t last = e + 1 == coarse.elements() ? ratio : ratio - 1;
    for (std::size_t s = 0; s <= last; ++s) {
      const std::size_t k = e * ratio + s;
      const Shape sh = shape(static_cast<double>(s) / static_cast<double>(ratio), coarse.h());
      if (const std::size_t d = fine.value_dof(k); d != HermiteMesh1D::npos) out[d] = dot4(sh.n, local);
      out[fine.slope_dof(k)] = dot4(sh.dn, local);
    }
  }
  return out;
}

BeamSystem assemble_beam_system(const BeamProblem& problem, const HermiteMesh1D& mesh) {
  problem.validate();
  if (mesh.length() != problem.length) throw Error(ErrorCode::InvalidArgument, "beam: mesh length differs from L");
  const std::size_t n = mesh.dof_count();
  BeamSystem sys{BandMatrix(n, kHalfBandwidth, kHalfBandwidth), BandMatrix(n, kHalfBandwidth, kHalfBandwidth),
                 BandMatrix(n, kHalfBandwidth, kHalfBandwidth), Vector(n, 0.0)};
  const double h = mesh.h();
  const double weight = problem.density * problem.gravity;
  for (std::size_t e = 0; e < mesh.elements(); ++e) {
    const auto dofs = element_dofs(mesh, e);
    for (const GaussPoint& q : kGauss) {
      const Shape s = shape(q.t, h);
      const double wq = q.w * h;
      for (std::size_t i = 0; i < 4; ++i) {
        if (dofs[i] == HermiteMesh1D::npos) continue;
        sys.load[dofs[i]] += wq * weight * s.n[i];
        for (std::size_t j = 0; j < 4; ++j) {
          if (dofs[j] == HermiteMesh1D::npos) continue;
          sys.stiffness(dofs[i], dofs[j]) += wq * problem.bending * s.ddn[i] * s.ddn[j];
          sys.geometric(dofs[i], dofs[j]) += wq * problem.load * s.dn[i] * s.dn[j];
          sys.mass(dofs[i], dofs[j]) += wq * s.n[i] * s.n[j];
        }
      }
    }
  }
  return sys;
}

BeamModel::BeamModel(BeamProblem problem, HermiteMesh1D mesh)
    : problem_(problem), mesh_(mesh), system_(assemble_beam_system(problem_, mesh_)), operator_(system_.stiffness) {
  BandMatrix g = system_.geometric;
  g *= -1.0;
  operator_ += g;
}

Vector BeamModel::residual(double gamma, std::span<const double> y) const {
  check_gamma(gamma);
  check_dimension(mesh_, y);
  // The operator has condition number ~ h^-4; a compensated (doubled
  // precision) row product makes Newton steps act as iterative refinement.
  const std::size_t n = y.size();
  Vector r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = -system_.load[i];
    double err = 0.0;
    const std::size_t lo = i >= kHalfBandwidth ? i - kHalfBandwidth : 0;
    const std::size_t hi = std::min(n, i + kHalfBandwidth + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      const double p = operator_(i, j) * y[j];
      const double pe = std::fma(operator_(i, j), y[j], -p);
      const double t = sum + p;
      const double z = t - sum;
      err += (sum - (t - z)) + (p - z) + pe;
      sum = t;
    }
    r[i] = sum + err;
  }
  if (gamma == 0.0) return r;
  const double h = mesh_.h();
  for (std::size_t e = 0; e < mesh_.elements(); ++e) {
    const auto dofs = element_dofs(mesh_, e);
    const auto local = gather(dofs, y);
    for (const GaussPoint& q : kGauss) {
      const Shape s = shape(q.t, h);
      const double p = penalty(dot4(s.n, local), problem_.half_width).first;
      if (p == 0.0) continue;
      for (std::size_t i = 0; i < 4; ++i) {
        if (dofs[i] != HermiteMesh1D::npos) r[dofs[i]] += gamma * q.w * h * p * s.n[i];
      }
    }
  }
  return r;
}

BandMatrix BeamModel::derivative(double gamma, std::span<const double> y) const {
  check_gamma(gamma);
  check_dimension(mesh_, y);
  BandMatrix d = operator_;
  if (gamma == 0.0) return d;
  const double h = mesh_.h();
  for (std::size_t e = 0; e < mesh_.elements(); ++e) {
    const auto dofs = element_dofs(mesh_, e);
    const auto local = gather(dofs, y);
    for (const GaussPoint& q : kGauss) {
      const Shape s = shape(q.t, h);
      if (penalty(dot4(s.n, local), problem_.half_width).second == 0.0) continue;
      const double c = gamma * q.w * h;
      for (std::size_t i = 0; i < 4; ++i) {
        if (dofs[i] == HermiteMesh1D::npos) continue;
        for (std::size_t j = 0; j < 4; ++j) {
          if (dofs[j] != HermiteMesh1D::npos) d(dofs[i], dofs[j]) += c * s.n[i] * s.n[j];
        }
      }
    }
  }
  return d;
}

double BeamModel::energy(double gamma, std::span<const double> y) const {
  check_gamma(gamma);
  check_dimension(mesh_, y);
  const double quadratic = dot(y, multiply(system_.stiffness, y)) - dot(y, multiply(system_.geometric, y));
  double penalty_energy = 0.0;
  const double h = mesh_.h();
  for (std::size_t e = 0; e < mesh_.elements(); ++e) {
    const auto local = gather(element_dofs(mesh_, e), y);
    for (const GaussPoint& q : kGauss) {
      const double p = penalty(dot4(shape(q.t, h).n, local), problem_.half_width).first;
      penalty_energy += q.w * h * p * p;
    }
  }
  return 0.5 * quadratic - dot(system_.load, y) + 0.5 * gamma * penalty_energy;
}

double BeamModel::active_fraction(std::span<const double> y) const {
  check_dimension(mesh_, y);
  std::size_t active = 0;
  const double h = mesh_.h();
  for (std::size_t e = 0; e < mesh_.elements(); ++e) {
    const auto local = gather(element_dofs(mesh_, e), y);
    for (const GaussPoint& q : kGauss) {
      if (penalty(dot4(shape(q.t, h).n, local), problem_.half_width).second != 0.0) ++active;
    }
  }
  return static_cast<double>(active) / static_cast<double>(kGauss.size() * mesh_.elements());
}

Vector BeamModel::unconstrained_solution() const {
  const LuFactorization lu = lu_factor(operator_);
  Vector y = lu.solve(system_.load);
  for (int sweep = 0; sweep < 3; ++sweep) {
    const Vector d = lu.solve(residual(0.0, y));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= d[i];
  }
  return y;
}

double BeamModel::roundoff_scale() const {
  const std::size_t n = mesh_.dof_count();
  double row_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    const std::size_t lo = i >= kHalfBandwidth ? i - kHalfBandwidth : 0;
    for (std::size_t j = lo; j < std::min(n, i + kHalfBandwidth + 1); ++j) row += std::abs(operator_(i, j));
    row_max = std::max(row_max, row);
  }
  return std::sqrt(static_cast<double>(n)) * row_max * problem_.half_width * std::numeric_limits<double>::epsilon();
}

Vector moreau_yosida_residual(const BeamProblem& problem, const HermiteMesh1D& mesh, double gamma,
                              std::span<const double> y) {
  return BeamModel(problem, mesh).residual(gamma, y);
}

BandMatrix moreau_yosida_derivative(const BeamProblem& problem, const HermiteMesh1D& mesh, double gamma,
                                    std::span<const double> y) {
  return BeamModel(problem, mesh).derivative(gamma, y);
}

NonlinearSystem beam_nonlinear_system(std::shared_ptr<const BeamModel> model, double gamma) {
  check_gamma(gamma);
  NonlinearSystem system;
  system.dimension = model->mesh().dof_count();
  system.residual = [model, gamma](std::span<const double> y) { return model->residual(gamma, y); };
  system.derivative = [model, gamma](std::span<const double> y) -> AnyMatrix { return model->derivative(gamma, y); };
  return system;
}

double PathConfig::effective_ratio() const {
  if (ratio) return *ratio;
  return std::pow(gamma_max / gamma0, 1.0 / 9.0);
}

void PathConfig::validate() const {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma_max) || !(gamma_max >= gamma0)) {
    throw Error(ErrorCode::InvalidArgument, "path: need 0 < gamma0 <= gamma_max < inf");
  }
  if (ratio && (!(*ratio > 1.0) || !std::isfinite(*ratio))) {
    throw Error(ErrorCode::InvalidArgument, "path: gamma ratio must exceed 1");
  }
  if (initial_elements < 1) throw Error(ErrorCode::InvalidArgument, "path: need at least one element");
  if (!(roundoff_factor >= 0.0) || !std::isfinite(roundoff_factor)) {
    throw Error(ErrorCode::InvalidArgument, "path: roundoff factor must be non-negative");
  }
  solver.validate();
}

namespace {

HermiteMesh1D refine_for(HermiteMesh1D mesh, double gamma) {
  const double target = 1.0 / std::sqrt(gamma);
  while (mesh.h() > target) mesh = mesh.refined();
  return mesh;
}

SolverConfig level_solver(const PathConfig& config, const BeamModel& model) {
  SolverConfig out = config.solver;
  out.atol = std::max(out.atol, config.roundoff_factor * model.roundoff_scale());
  return out;
}

DeflationSettings l2_deflation(const PathConfig& config, const BeamModel& model) {
  DeflationSettings d;
  d.power = config.power;
  d.shift = config.shift;
  d.norm = NormSpec::weighted(model.system().mass);
  return d;
}

PathStep summarize(const SolutionSet& set, std::size_t step, double gamma, std::size_t elements,
                   std::size_t roots_before) {
  PathStep out{step, gamma, elements, {}, 0};
  std::size_t survivors = roots_before;
  if (step > 0) {
    survivors = 0;
    for (const Event& e : set.events) {
      if (e.step == step && e.kind == "branch") {
        out.branch_iterations.push_back(e.iterations);
        ++survivors;
      }
    }
  }
  out.newcomers = set.roots.size() - survivors;
  return out;
}

}  // namespace

PathState path_follow(const BeamProblem& problem, const std::vector<Vector>& guesses, const PathConfig& config) {
  problem.validate();
  config.validate();
  PathState state;
  state.gamma = config.gamma0;
  state.gamma_max = config.gamma_max;
  state.mesh = refine_for(HermiteMesh1D(config.initial_elements, problem.length), state.gamma);

  auto model = std::make_shared<const BeamModel>(problem, state.mesh);
  DeflationSettings deflation = l2_deflation(config, *model);
  SolverConfig solver = level_solver(config, *model);
  std::vector<Vector> start = guesses;
  if (start.empty()) start.emplace_back(state.mesh.dof_count(), 0.0);
  state.solutions = deflated_search(beam_nonlinear_system(model, state.gamma), start, deflation, solver,
                                    config.search, state.gamma);
  if (state.solutions.roots.empty()) {
    throw Error(ErrorCode::AllBranchesLost, "path: initial search found no solution");
  }
  state.history.push_back(summarize(state.solutions, 0, state.gamma, state.mesh.elements(), 0));

  const double q = config.effective_ratio();
  for (std::size_t step = 1; state.gamma < state.gamma_max; ++step) {
    double next = state.gamma * q;
    if (next >= state.gamma_max * (1.0 - 1e-12)) next = state.gamma_max;
    const HermiteMesh1D mesh = refine_for(state.mesh, next);
    std::vector<Vector> starts;
    starts.reserve(state.solutions.roots.size());
    for (const FoundRoot& r : state.solutions.roots) {
      starts.push_back(mesh.elements() == state.mesh.elements() ? r.z : prolong(state.mesh, r.z, mesh));
    }
    if (mesh.elements() != state.mesh.elements()) {
      model = std::make_shared<const BeamModel>(problem, mesh);
      deflation = l2_deflation(config, *model);
      solver = level_solver(config, *model);
    }
    state.mesh = mesh;
    state.gamma = next;
    state.solutions = advance_branches(beam_nonlinear_system(model, next), std::move(state.solutions), starts,
                                       deflation, solver, config.search, next, step);
    state.history.push_back(summarize(state.solutions, step, next, mesh.elements(), 0));
  }
  return state;
}

}  // namespace defcon

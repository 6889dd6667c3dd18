#pragma once

// Deflation operators.
//
// Given known roots r_1..r_k, the deflated residual is G(z) = alpha(z) F(z) with
//
//   alpha(z) = prod_i ( ||z - r_i||^{-p} + sigma ).
//
// sigma = 0 is the classical norm deflation, sigma = 1 the shifted variant
// that leaves G ~ F far from every known root. G has exactly the roots of F
// other than r_1..r_k, and its Newton derivative is the rank-one perturbation
//
//   H_G(z) = alpha(z) H_F(z) + F(z) grad(alpha)(z)^T.

#include <memory>
#include <span>
#include <vector>

#include "defcon/linalg.hpp"

namespace defcon {

class NormSpec {
 public:
  enum class Kind { Euclidean, WeightedQuadratic };

  NormSpec() = default;
  static NormSpec euclidean() { return NormSpec(); }
  // ||v||_W = sqrt(v^T W v). Throws Error(InvalidArgument) unless W is SPD.
  static NormSpec weighted(AnyMatrix weight);

  Kind kind() const noexcept { return kind_; }
  const AnyMatrix* weight() const noexcept { return weight_.get(); }

  double norm(std::span<const double> v) const;
  // W v (v itself for the Euclidean norm).
  Vector apply_weight(std::span<const double> v) const;

 private:
  Kind kind_ = Kind::Euclidean;
  std::shared_ptr<const AnyMatrix> weight_;
};

class DeflationState {
 public:
  DeflationState(double power = 2.0, double shift = 1.0, NormSpec norm = {}, double guard = 1e-10);

  double power() const noexcept { return power_; }
  double shift() const noexcept { return shift_; }
  double guard() const noexcept { return guard_; }
  const NormSpec& norm() const noexcept { return norm_; }
  const std::vector<Vector>& roots() const noexcept { return roots_; }
  bool empty() const noexcept { return roots_.empty(); }

  // Throws Error(InvalidArgument) on dimension mismatch or if the root lies
  // within the guard distance of one already deflated.
  void add_root(Vector root);

  void replace_norm(NormSpec norm) { norm_ = std::move(norm); }
  // Roots are stored by value; used when the discretization is refined.
  void replace_roots(std::vector<Vector> roots);

  // Distance to the closest deflated root under the active norm (inf if none).
  double min_distance(std::span<const double> z) const;

 private:
  double power_;
  double shift_;
  NormSpec norm_;
  double guard_;
  std::vector<Vector> roots_;
};

// Throws Error(AtDeflatedRoot) when z is within the guard of a deflated root.
double deflation_factor(const DeflationState& state, std::span<const double> z);
Vector deflation_gradient(const DeflationState& state, std::span<const double> z);
Vector deflated_residual(const DeflationState& state, std::span<const double> f_value,
                         std::span<const double> z);

struct DeflatedDerivativeParts {
  double scale = 1.0;
  Vector rank_one_u;
  Vector rank_one_w;
};

// H_G = scale * H_F + u w^T with scale = alpha(z), u = F(z), w = grad(alpha)(z).
// H_F itself is passed through untouched by the caller.
DeflatedDerivativeParts deflated_derivative_parts(const DeflationState& state,
                                                  std::span<const double> f_value,
                                                  std::span<const double> z);

}  // namespace defcon

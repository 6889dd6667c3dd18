#include "defcon/deflation.hpp"

#include <cmath>
#include <limits>

#include "defcon/errors.hpp"

namespace defcon {

namespace {

Vector difference(std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

struct RootTerm {
  Vector weighted_diff;  // W (z - r)
  double distance = 0.0;
  double factor = 0.0;  // ||z - r||^{-p} + sigma
};

std::vector<RootTerm> root_terms(const DeflationState& state, std::span<const double> z) {
  std::vector<RootTerm> terms;
  terms.reserve(state.roots().size());
  for (const Vector& r : state.roots()) {
    if (r.size() != z.size()) throw Error(ErrorCode::InvalidArgument, "deflation: dimension mismatch");
    const Vector d = difference(z, r);
    RootTerm t;
    t.weighted_diff = state.norm().apply_weight(d);
    t.distance = std::sqrt(std::max(0.0, dot(d, t.weighted_diff)));
    if (!(t.distance > state.guard())) {
      throw Error(ErrorCode::AtDeflatedRoot, "deflation: point lies on a deflated root");
    }
    t.factor = std::pow(t.distance, -state.power()) + state.shift();
    terms.push_back(std::move(t));
  }
  return terms;
}

}  // namespace

NormSpec NormSpec::weighted(AnyMatrix weight) {
  if (!is_symmetric_positive_definite(weight)) {
    throw Error(ErrorCode::InvalidArgument, "NormSpec: weight matrix is not symmetric positive definite");
  }
  NormSpec spec;
  spec.kind_ = Kind::WeightedQuadratic;
  spec.weight_ = std::make_shared<const AnyMatrix>(std::move(weight));
  return spec;
}

double NormSpec::norm(std::span<const double> v) const {
  if (kind_ == Kind::Euclidean) return norm2(v);
  return std::sqrt(std::max(0.0, dot(v, multiply(*weight_, v))));
}

Vector NormSpec::apply_weight(std::span<const double> v) const {
  if (kind_ == Kind::Euclidean) return Vector(v.begin(), v.end());
  return multiply(*weight_, v);
}

DeflationState::DeflationState(double power, double shift, NormSpec norm, double guard)
    : power_(power), shift_(shift), norm_(std::move(norm)), guard_(guard) {
  if (!(power_ >= 1.0)) throw Error(ErrorCode::InvalidArgument, "DeflationState: power must be >= 1");
  if (!(shift_ >= 0.0)) throw Error(ErrorCode::InvalidArgument, "DeflationState: shift must be >= 0");
  if (!(guard_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "DeflationState: guard must be positive");
}

void DeflationState::add_root(Vector root) {
  if (!roots_.empty() && root.size() != roots_.front().size()) {
    throw Error(ErrorCode::InvalidArgument, "DeflationState: root dimension mismatch");
  }
  if (min_distance(root) <= guard_) {
    throw Error(ErrorCode::InvalidArgument, "DeflationState: root already deflated");
  }
  roots_.push_back(std::move(root));
}

void DeflationState::replace_roots(std::vector<Vector> roots) {
  roots_.clear();
  for (Vector& r : roots) add_root(std::move(r));
}

double DeflationState::min_distance(std::span<const double> z) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& r : roots_) {
    if (r.size() != z.size()) throw Error(ErrorCode::InvalidArgument, "deflation: dimension mismatch");
    best = std::min(best, norm_.norm(difference(z, r)));
  }
  return best;
}

double deflation_factor(const DeflationState& state, std::span<const double> z) {
  double alpha = 1.0;
  for (const RootTerm& t : root_terms(state, z)) alpha *= t.factor;
  return alpha;
}

Vector deflation_gradient(const DeflationState& state, std::span<const double> z) {
  const std::vector<RootTerm> terms = root_terms(state, z);
  const std::size_t k = terms.size();
  Vector grad(z.size(), 0.0);
  // prefix[i] * suffix[i] = prod_{j != i} m_j without dividing by m_i.
  std::vector<double> prefix(k + 1, 1.0);
  std::vector<double> suffix(k + 1, 1.0);
  for (std::size_t i = 0; i < k; ++i) prefix[i + 1] = prefix[i] * terms[i].factor;
  for (std::size_t i = k; i-- > 0;) suffix[i] = suffix[i + 1] * terms[i].factor;
  for (std::size_t i = 0; i < k; ++i) {
    const double others = prefix[i] * suffix[i + 1];
    const double c = -state.power() * others * std::pow(terms[i].distance, -(state.power() + 2.0));
    for (std::size_t j = 0; j < z.size(); ++j) grad[j] += c * terms[i].weighted_diff[j];
  }
  return grad;
}

Vector deflated_residual(const DeflationState& state, std::span<const double> f_value,
                         std::span<const double> z) {
  const double alpha = deflation_factor(state, z);
  Vector g(f_value.begin(), f_value.end());
  for (double& v : g) v *= alpha;
  return g;
}

DeflatedDerivativeParts deflated_derivative_parts(const DeflationState& state,
                                                  std::span<const double> f_value,
                                                  std::span<const double> z) {
  DeflatedDerivativeParts parts;
  if (state.empty()) {
    parts.rank_one_u.assign(z.size(), 0.0);
    parts.rank_one_w.assign(z.size(), 0.0);
    return parts;
  }
  parts.scale = deflation_factor(state, z);
  parts.rank_one_u.assign(f_value.begin(), f_value.end());
  parts.rank_one_w = deflation_gradient(state, z);
  return parts;
}

}  // namespace defcon

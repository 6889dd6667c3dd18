#include "defcon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "defcon/errors.hpp"

namespace defcon {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::InvalidArgument, "DenseMatrix: entry count does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix eye(n, n);
  for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
  return eye;
}

double DenseMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

BandMatrix::BandMatrix(std::size_t n, std::size_t lower, std::size_t upper)
    : n_(n), lower_(lower), upper_(upper), band_(n * (lower + upper + 1), 0.0) {}

double& BandMatrix::operator()(std::size_t i, std::size_t j) {
  if (!in_band(i, j)) throw Error(ErrorCode::InvalidArgument, "BandMatrix: write outside band");
  return band_[i * (lower_ + upper_ + 1) + (j + lower_ - i)];
}

double BandMatrix::operator()(std::size_t i, std::size_t j) const {
  if (!in_band(i, j)) return 0.0;
  return band_[i * (lower_ + upper_ + 1) + (j + lower_ - i)];
}

BandMatrix& BandMatrix::operator+=(const BandMatrix& other) {
  if (other.n_ != n_ || other.lower_ != lower_ || other.upper_ != upper_) {
    throw Error(ErrorCode::InvalidArgument, "BandMatrix: shape mismatch in +=");
  }
  for (std::size_t k = 0; k < band_.size(); ++k) band_[k] += other.band_[k];
  return *this;
}

BandMatrix& BandMatrix::operator*=(double s) {
  for (double& v : band_) v *= s;
  return *this;
}

DenseMatrix BandMatrix::to_dense() const {
  DenseMatrix d(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i >= lower_ ? i - lower_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + upper_);
    for (std::size_t j = j0; j <= j1; ++j) d(i, j) = (*this)(i, j);
  }
  return d;
}

double BandMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : band_) m = std::max(m, std::abs(v));
  return m;
}

std::size_t dimension(const AnyMatrix& a) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseMatrix>) {
          return m.rows();
        } else {
          return m.size();
        }
      },
      a);
}

Vector multiply(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw Error(ErrorCode::InvalidArgument, "multiply: size mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vector multiply(const BandMatrix& a, std::span<const double> x) {
  const std::size_t n = a.size();
  if (x.size() != n) throw Error(ErrorCode::InvalidArgument, "multiply: size mismatch");
  Vector y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = i >= a.lower() ? i - a.lower() : 0;
    const std::size_t j1 = std::min(n - 1, i + a.upper());
    double s = 0.0;
    for (std::size_t j = j0; j <= j1; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vector multiply(const AnyMatrix& a, std::span<const double> x) {
  return std::visit([&](const auto& m) { return multiply(m, x); }, a);
}

Vector multiply_transpose(const AnyMatrix& a, std::span<const double> x) {
  if (const auto* band = std::get_if<BandMatrix>(&a)) {
    const std::size_t n = band->size();
    if (x.size() != n) throw Error(ErrorCode::InvalidArgument, "multiply_transpose: size mismatch");
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j0 = i >= band->lower() ? i - band->lower() : 0;
      const std::size_t j1 = std::min(n - 1, i + band->upper());
      for (std::size_t j = j0; j <= j1; ++j) y[j] += (*band)(i, j) * x[i];
    }
    return y;
  }
  const DenseMatrix& d = std::get<DenseMatrix>(a);
  if (x.size() != d.rows()) throw Error(ErrorCode::InvalidArgument, "multiply_transpose: size mismatch");
  Vector y(d.cols(), 0.0);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) y[j] += d(i, j) * x[i];
  }
  return y;
}

DenseMatrix to_dense(const AnyMatrix& a) {
  return std::visit(
      [](const auto& m) -> DenseMatrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseMatrix>) {
          return m;
        } else {
          return m.to_dense();
        }
      },
      a);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

DenseLu::DenseLu(DenseMatrix a, const FactorOptions& options) : factors_(std::move(a)) {
  const std::size_t n = factors_.rows();
  if (factors_.cols() != n) throw Error(ErrorCode::InvalidArgument, "lu_factor: matrix not square");
  if (!factors_.all_finite()) throw Error(ErrorCode::InvalidArgument, "lu_factor: non-finite entry");
  const double threshold = options.relative_pivot_threshold * factors_.max_abs();
  pivots_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(factors_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(factors_(i, k)) > best) {
        best = std::abs(factors_(i, k));
        p = i;
      }
    }
    pivots_[k] = p;
    if (p != k) {
      auto rk = factors_.row(k);
      auto rp = factors_.row(p);
      std::swap_ranges(rk.begin(), rk.end(), rp.begin());
    }
    if (best <= threshold || best == 0.0) {
      singular_ = true;
      continue;
    }
    const double pivot = factors_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = factors_(i, k) / pivot;
      factors_(i, k) = m;
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) factors_(i, j) -= m * factors_(k, j);
    }
  }
}

void DenseLu::solve_in_place(std::span<double> b) const {
  const std::size_t n = size();
  for (std::size_t k = 0; k < n; ++k) {
    if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
  }
  for (std::size_t i = 1; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= factors_(i, j) * b[j];
    b[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= factors_(i, j) * b[j];
    b[i] = s / factors_(i, i);
  }
}

BandLu::BandLu(const BandMatrix& a, const FactorOptions& options)
    : n_(a.size()), lower_(a.lower()), width_(a.lower() + a.upper()) {
  const double threshold = options.relative_pivot_threshold * a.max_abs();
  for (double v : a.band_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "lu_factor: non-finite entry");
  }
  // Working rows cover columns [i - lower, i + lower + upper]; partial pivoting
  // can push fill-in up to lower extra superdiagonals.
  const std::size_t span = 2 * lower_ + a.upper() + 1;
  std::vector<double> work(n_ * span, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return work[i * span + (j + lower_ - i)]; };
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i >= lower_ ? i - lower_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + a.upper());
    for (std::size_t j = j0; j <= j1; ++j) at(i, j) = a(i, j);
  }

  pivots_.resize(n_);
  l_.assign(n_ * lower_, 0.0);
  u_.assign(n_ * (width_ + 1), 0.0);
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t last_row = std::min(n_ - 1, k + lower_);
    const std::size_t last_col = std::min(n_ - 1, k + width_);
    std::size_t p = k;
    double best = std::abs(at(k, k));
    for (std::size_t i = k + 1; i <= last_row; ++i) {
      if (std::abs(at(i, k)) > best) {
        best = std::abs(at(i, k));
        p = i;
      }
    }
    pivots_[k] = p;
    if (p != k) {
      for (std::size_t j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
    }
    if (best <= threshold || best == 0.0) {
      singular_ = true;
    } else {
      const double pivot = at(k, k);
      for (std::size_t i = k + 1; i <= last_row; ++i) {
        const double m = at(i, k) / pivot;
        l_[k * lower_ + (i - k - 1)] = m;
        if (m == 0.0) continue;
        for (std::size_t j = k + 1; j <= last_col; ++j) at(i, j) -= m * at(k, j);
      }
    }
    for (std::size_t j = k; j <= last_col; ++j) u_[k * (width_ + 1) + (j - k)] = at(k, j);
  }
}

void BandLu::solve_in_place(std::span<double> b) const {
  for (std::size_t k = 0; k < n_; ++k) {
    if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
    const std::size_t last_row = std::min(n_ - 1, k + lower_);
    for (std::size_t i = k + 1; i <= last_row; ++i) b[i] -= l_[k * lower_ + (i - k - 1)] * b[k];
  }
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t last_col = std::min(n_ - 1, i + width_);
    const double* row = u_.data() + i * (width_ + 1);
    double s = b[i];
    for (std::size_t j = i + 1; j <= last_col; ++j) s -= row[j - i] * b[j];
    b[i] = s / row[0];
  }
}

std::size_t LuFactorization::size() const {
  return std::visit([](const auto& lu) { return lu.size(); }, impl_);
}

bool LuFactorization::singular() const {
  return std::visit([](const auto& lu) { return lu.singular(); }, impl_);
}

Vector LuFactorization::solve(std::span<const double> b) const {
  if (singular()) throw Error(ErrorCode::SingularMatrix, "solve requested on a singular factorization");
  if (b.size() != size()) throw Error(ErrorCode::InvalidArgument, "solve: right-hand side size mismatch");
  Vector x(b.begin(), b.end());
  std::visit([&](const auto& lu) { lu.solve_in_place(x); }, impl_);
  return x;
}

LuFactorization lu_factor(const DenseMatrix& a, const FactorOptions& options) {
  return LuFactorization(DenseLu(a, options));
}

LuFactorization lu_factor(const BandMatrix& a, const FactorOptions& options) {
  return LuFactorization(BandLu(a, options));
}

LuFactorization lu_factor(const AnyMatrix& a, const FactorOptions& options) {
  return std::visit([&](const auto& m) { return lu_factor(m, options); }, a);
}

Vector solve_rank_one_update(const LuFactorization& fac, std::span<const double> u,
                             std::span<const double> w, std::span<const double> b,
                             const RankOneOptions& options) {
  const std::size_t n = fac.size();
  if (u.size() != n || w.size() != n || b.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "solve_rank_one_update: size mismatch");
  }
  Vector x = fac.solve(b);
  if (norm_inf(u) == 0.0 || norm_inf(w) == 0.0) return x;
  const Vector y = fac.solve(u);
  const double denominator = 1.0 + dot(w, y);
  if (!(std::abs(denominator) >= options.denominator_threshold)) {
    throw Error(ErrorCode::SingularUpdate, "solve_rank_one_update: 1 + w^T A^{-1} u is numerically zero");
  }
  const double c = dot(w, x) / denominator;
  for (std::size_t i = 0; i < n; ++i) x[i] -= c * y[i];
  return x;
}

namespace {

bool cholesky_succeeds(const DenseMatrix& a, double symmetry_tol) {
  const std::size_t n = a.rows();
  if (a.cols() != n) return false;
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > symmetry_tol * scale) return false;
    }
  }
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

bool banded_cholesky_succeeds(const BandMatrix& a, double symmetry_tol) {
  const std::size_t n = a.size();
  const std::size_t bw = std::max(a.lower(), a.upper());
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= std::min(n - 1, i + bw); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > symmetry_tol * scale) return false;
    }
  }
  // l(i, i - t) stored at i * (bw + 1) + t.
  std::vector<double> l(n * (bw + 1), 0.0);
  auto lat = [&](std::size_t i, std::size_t j) -> double& { return l[i * (bw + 1) + (i - j)]; };
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k0 = j >= bw ? j - bw : 0;
    double d = a(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= lat(j, k) * lat(j, k);
    if (!(d > 0.0)) return false;
    lat(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i <= std::min(n - 1, j + bw); ++i) {
      double s = a(i, j);
      const std::size_t m0 = i >= bw ? i - bw : 0;
      for (std::size_t k = std::max(k0, m0); k < j; ++k) s -= lat(i, k) * lat(j, k);
      lat(i, j) = s / lat(j, j);
    }
  }
  return true;
}

}  // namespace

bool is_symmetric_positive_definite(const AnyMatrix& a, double symmetry_tol) {
  if (const auto* band = std::get_if<BandMatrix>(&a)) return banded_cholesky_succeeds(*band, symmetry_tol);
  return cholesky_succeeds(std::get<DenseMatrix>(a), symmetry_tol);
}

}  // namespace defcon

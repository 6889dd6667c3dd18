#pragma once

// Dense and banded matrix kernels used by the semismooth Newton driver.
//
// Everything here works on std::vector<double> / std::span<const double>.
// Problems in this library are at most a few thousand unknowns, so dense LU
// with partial pivoting is the default; the 1D finite element code declares
// its bandwidth and goes through the banded path instead.

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace defcon {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  double max_abs() const noexcept;
  bool all_finite() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Square matrix with `lower` subdiagonals and `upper` superdiagonals.
// Entries outside the band read as zero and may not be written.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, std::size_t lower, std::size_t upper);

  std::size_t size() const noexcept { return n_; }
  std::size_t lower() const noexcept { return lower_; }
  std::size_t upper() const noexcept { return upper_; }

  bool in_band(std::size_t i, std::size_t j) const noexcept {
    return j + lower_ >= i && i + upper_ >= j;
  }

  double& operator()(std::size_t i, std::size_t j);
  double operator()(std::size_t i, std::size_t j) const;

  BandMatrix& operator+=(const BandMatrix& other);
  BandMatrix& operator*=(double s);

  DenseMatrix to_dense() const;
  double max_abs() const noexcept;

 private:
  friend class BandLu;
  std::size_t n_ = 0;
  std::size_t lower_ = 0;
  std::size_t upper_ = 0;
  // Row-major band: entry (i, j) lives at i * width + (j + lower - i).
  std::vector<double> band_;
};

using AnyMatrix = std::variant<DenseMatrix, BandMatrix>;

std::size_t dimension(const AnyMatrix& a);
Vector multiply(const DenseMatrix& a, std::span<const double> x);
Vector multiply(const BandMatrix& a, std::span<const double> x);
Vector multiply(const AnyMatrix& a, std::span<const double> x);
// A^T x.
Vector multiply_transpose(const AnyMatrix& a, std::span<const double> x);
DenseMatrix to_dense(const AnyMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

struct FactorOptions {
  // Pivots with |p| < relative_pivot_threshold * max|A| mark the factorization singular.
  double relative_pivot_threshold = 1e-14;
};

class DenseLu {
 public:
  DenseLu(DenseMatrix a, const FactorOptions& options);
  std::size_t size() const noexcept { return factors_.rows(); }
  bool singular() const noexcept { return singular_; }
  void solve_in_place(std::span<double> b) const;
  const DenseMatrix& factors() const noexcept { return factors_; }
  const std::vector<std::size_t>& pivots() const noexcept { return pivots_; }

 private:
  DenseMatrix factors_;
  std::vector<std::size_t> pivots_;
  bool singular_ = false;
};

class BandLu {
 public:
  BandLu(const BandMatrix& a, const FactorOptions& options);
  std::size_t size() const noexcept { return n_; }
  bool singular() const noexcept { return singular_; }
  void solve_in_place(std::span<double> b) const;

 private:
  std::size_t n_ = 0;
  std::size_t lower_ = 0;
  std::size_t width_ = 0;  // stored upper bandwidth after fill-in is lower + upper
  std::vector<double> u_;  // row i holds U(i, i .. i + width_)
  std::vector<double> l_;  // row-major multipliers, l_[k * lower_ + t] = L(k + 1 + t, k)
  std::vector<std::size_t> pivots_;
  bool singular_ = false;
};

// LU factorization with partial pivoting, dense or banded.
class LuFactorization {
 public:
  explicit LuFactorization(DenseLu lu) : impl_(std::move(lu)) {}
  explicit LuFactorization(BandLu lu) : impl_(std::move(lu)) {}

  std::size_t size() const;
  bool singular() const;
  bool banded() const noexcept { return std::holds_alternative<BandLu>(impl_); }

  // Throws Error(SingularMatrix) when the singular flag is set.
  Vector solve(std::span<const double> b) const;

 private:
  std::variant<DenseLu, BandLu> impl_;
};

LuFactorization lu_factor(const DenseMatrix& a, const FactorOptions& options = {});
LuFactorization lu_factor(const BandMatrix& a, const FactorOptions& options = {});
LuFactorization lu_factor(const AnyMatrix& a, const FactorOptions& options = {});

struct RankOneOptions {
  double denominator_threshold = 1e-14;
};

// Solves (A + u w^T) x = b given the factorization of A (Sherman-Morrison).
// Throws Error(SingularUpdate) when |1 + w^T A^{-1} u| falls below the threshold.
Vector solve_rank_one_update(const LuFactorization& fac, std::span<const double> u,
                             std::span<const double> w, std::span<const double> b,
                             const RankOneOptions& options = {});

// Cholesky-based test; used to validate weight matrices for weighted norms.
bool is_symmetric_positive_definite(const AnyMatrix& a, double symmetry_tol = 1e-12);

}  // namespace defcon

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace bsr {

using cxd = std::complex<double>;
using cvec = std::vector<cxd>;

/// QR met a numerically rank-deficient column.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(std::size_t column, std::size_t total_columns);
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Least-squares column count reached or exceeded the row count.
class DegenerateRegressionError : public std::runtime_error {
 public:
  DegenerateRegressionError(std::size_t cols, std::size_t rows);
};

/// No selectable block remained.
class ExhaustionError : public std::runtime_error {
 public:
  ExhaustionError();
};

double norm_sq(std::span<const cxd> v);
double norm(std::span<const cxd> v);

/// Dense complex matrix, row-major.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  cxd& operator()(std::size_t r, std::size_t c) noexcept { return a_[r * cols_ + c]; }
  const cxd& operator()(std::size_t r, std::size_t c) const noexcept { return a_[r * cols_ + c]; }

  std::span<const cxd> row(std::size_t r) const { return {a_.data() + r * cols_, cols_}; }
  std::span<cxd> row(std::size_t r) { return {a_.data() + r * cols_, cols_}; }

  std::span<const cxd> entries() const noexcept { return a_; }
  std::span<cxd> entries() noexcept { return a_; }

  /// A * x
  cvec multiply(std::span<const cxd> x) const;
  /// A^H * y
  cvec multiply_adjoint(std::span<const cxd> y) const;
  /// Copy of columns [first, first+count).
  ComplexMatrix columns(std::size_t first, std::size_t count) const;
  /// Extract one column.
  cvec column(std::size_t c) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cxd> a_;
};

/// Deterministic random stream: mt19937_64 engine with an explicit
/// Box-Muller transform so sampled values are identical on every platform.
/// Child streams for parallel trials come from derive(), which mixes the
/// identifiers through SplitMix64 so distinct id tuples give disjoint streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t id);
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Standard normal.
  double gaussian();
  /// CN(0, variance): real and imaginary parts each N(0, variance/2).
  cxd complex_gaussian(double variance);
  /// Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n i.i.d. CN(0, variance) samples.
cvec sample_complex_gaussian(Rng& rng, double variance, std::size_t n);

/// Standard normal CDF.
double std_normal_cdf(double x);

/// Standard normal quantile, |error| <= 1e-9 on (0,1) (in practice ~1e-15:
/// Acklam's rational approximation polished by one Halley step on the
/// erfc-based CDF). Throws std::domain_error outside (0,1).
double std_normal_inv_cdf(double p);

/// Householder-QR least squares: argmin_x ||y - A x||_2, A m-by-n with m >= n.
cvec least_squares(const ComplexMatrix& a, const cvec& y);

/// Householder QR that grows by appended columns; solves against any RHS.
/// Matches least_squares() on the same column set.
class IncrementalQr {
 public:
  explicit IncrementalQr(std::size_t rows);

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }

  void append_column(std::span<const cxd> col);
  void append_columns(const ComplexMatrix& block);
  /// Coefficients for min ||y - A x||.
  cvec solve(std::span<const cxd> y) const;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<std::vector<cxd>> reflectors_;  // reflector j spans rows [j, m)
  std::vector<cvec> r_cols_;                  // column j of R, entries [0, j]
  double max_diag_ = 0.0;
};

}  // namespace bsr

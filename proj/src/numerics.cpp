#include "numerics.hpp"

#include <cmath>
#include <string>

namespace bsr {

namespace {

std::string singular_msg(std::size_t column, std::size_t total) {
  return "rank-deficient system: column " + std::to_string(column) + " of " +
         std::to_string(total) + " is numerically dependent";
}

}  // namespace

SingularityError::SingularityError(std::size_t column, std::size_t total_columns)
    : std::runtime_error(singular_msg(column, total_columns)), column_(column) {}

DegenerateRegressionError::DegenerateRegressionError(std::size_t cols, std::size_t rows)
    : std::runtime_error("regression over " + std::to_string(cols) +
                         " columns needs more than " + std::to_string(rows) + " rows") {}

ExhaustionError::ExhaustionError() : std::runtime_error("every block is excluded from selection") {}

double norm_sq(std::span<const cxd> v) {
  double acc = 0.0;
  for (const cxd& x : v) acc += std::norm(x);
  return acc;
}

double norm(std::span<const cxd> v) { return std::sqrt(norm_sq(v)); }

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), a_(rows * cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be positive");
}

cvec ComplexMatrix::multiply(std::span<const cxd> x) const {
  if (x.size() != cols_) throw std::invalid_argument("multiply: size mismatch");
  cvec out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const cxd* row = a_.data() + r * cols_;
    cxd acc{};
    for (std::size_t c = 0; c < cols_; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  return out;
}

cvec ComplexMatrix::multiply_adjoint(std::span<const cxd> y) const {
  if (y.size() != rows_) throw std::invalid_argument("multiply_adjoint: size mismatch");
  cvec out(cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const cxd* row = a_.data() + r * cols_;
    const cxd yr = y[r];
    for (std::size_t c = 0; c < cols_; ++c) out[c] += std::conj(row[c]) * yr;
  }
  return out;
}

ComplexMatrix ComplexMatrix::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw std::out_of_range("column slice out of range");
  ComplexMatrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
  return out;
}

cvec ComplexMatrix::column(std::size_t c) const {
  if (c >= cols_) throw std::out_of_range("column index out of range");
  cvec out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Rng::Rng(std::uint64_t seed) : eng_(seed) {}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t id) {
  // SplitMix64 finalizer over seed+id.
  std::uint64_t z = seed + id + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = seed;
  for (std::uint64_t id : ids) s = mix(s, id);
  return Rng(s);
}

std::uint64_t Rng::next_u64() { return eng_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

cxd Rng::complex_gaussian(double variance) {
  if (!(variance > 0.0)) throw std::domain_error("complex_gaussian: variance must be positive");
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-variance * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

std::size_t Rng::below(std::size_t bound) {
  if (bound == 0) throw std::domain_error("below: bound must be positive");
  return static_cast<std::size_t>(next_u64() % bound);
}

cvec sample_complex_gaussian(Rng& rng, double variance, std::size_t n) {
  cvec out(n);
  for (cxd& x : out) x = rng.complex_gaussian(variance);
  return out;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

double std_normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_inv_cdf: p must lie in (0,1)");

  // Acklam's rational approximation, |relative error| < 1.15e-9.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;

  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the erfc-based CDF.
  const double e = std_normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x -= u / (1.0 + x * u / 2.0);
  return x;
}

namespace {

// Forms the Householder reflector for v (in place), returning the resulting
// diagonal entry of R. After the call v holds the reflector direction.
cxd make_reflector(std::span<cxd> v) {
  const double nrm = norm(v);
  if (nrm == 0.0) return cxd{0.0, 0.0};
  const cxd head = v[0];
  const double ha = std::abs(head);
  const cxd phase = ha > 0.0 ? head / ha : cxd{1.0, 0.0};
  const cxd alpha = -phase * nrm;
  v[0] -= alpha;
  const double vn = norm(v);
  if (vn > 0.0)
    for (cxd& x : v) x /= vn;
  return alpha;
}

// x <- x - 2 v (v^H x) on the reflector's span.
void apply_reflector(std::span<const cxd> v, std::span<cxd> x) {
  cxd dot{};
  for (std::size_t i = 0; i < v.size(); ++i) dot += std::conj(v[i]) * x[i];
  dot *= 2.0;
  for (std::size_t i = 0; i < v.size(); ++i) x[i] -= dot * v[i];
}

}  // namespace

cvec least_squares(const ComplexMatrix& a, const cvec& y) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (y.size() != m) throw std::invalid_argument("least_squares: rhs length mismatch");
  if (m < n) throw DegenerateRegressionError(n, m);

  // Column-major working copy.
  std::vector<cvec> cols(n, cvec(m));
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) cols[c][r] = a(r, c);
  cvec rhs = y;

  std::vector<cvec> r_cols(n);
  double max_diag = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::span<cxd> v{cols[j].data() + j, m - j};
    const cxd diag = make_reflector(v);
    const double dmag = std::abs(diag);
    max_diag = std::max(max_diag, dmag);
    if (dmag <= 1e-12 * max_diag) throw SingularityError(j, n);
    r_cols[j].assign(cols[j].begin(), cols[j].begin() + j);
    r_cols[j].push_back(diag);
    for (std::size_t c = j + 1; c < n; ++c)
      apply_reflector(v, {cols[c].data() + j, m - j});
    apply_reflector(v, {rhs.data() + j, m - j});
  }

  // Back substitution on R x = (Q^H y)[0, n).
  cvec x(n);
  for (std::size_t jj = n; jj-- > 0;) {
    cxd acc = rhs[jj];
    for (std::size_t c = jj + 1; c < n; ++c) acc -= r_cols[c][jj] * x[c];
    x[jj] = acc / r_cols[jj][jj];
  }
  return x;
}

IncrementalQr::IncrementalQr(std::size_t rows) : m_(rows) {
  if (rows == 0) throw std::invalid_argument("IncrementalQr: rows must be positive");
}

void IncrementalQr::append_column(std::span<const cxd> col) {
  if (col.size() != m_) throw std::invalid_argument("append_column: length mismatch");
  if (n_ + 1 > m_) throw DegenerateRegressionError(n_ + 1, m_);
  cvec work(col.begin(), col.end());
  for (std::size_t j = 0; j < n_; ++j)
    apply_reflector(reflectors_[j], {work.data() + j, m_ - j});

  cvec refl(work.begin() + n_, work.end());
  const cxd diag = make_reflector(refl);
  const double dmag = std::abs(diag);
  max_diag_ = std::max(max_diag_, dmag);
  if (dmag <= 1e-12 * max_diag_) throw SingularityError(n_, n_ + 1);

  cvec rcol(work.begin(), work.begin() + n_);
  rcol.push_back(diag);
  reflectors_.push_back(std::move(refl));
  r_cols_.push_back(std::move(rcol));
  ++n_;
}

void IncrementalQr::append_columns(const ComplexMatrix& block) {
  if (block.rows() != m_) throw std::invalid_argument("append_columns: row mismatch");
  for (std::size_t c = 0; c < block.cols(); ++c) append_column(block.column(c));
}

cvec IncrementalQr::solve(std::span<const cxd> y) const {
  if (y.size() != m_) throw std::invalid_argument("solve: rhs length mismatch");
  cvec rhs(y.begin(), y.end());
  for (std::size_t j = 0; j < n_; ++j)
    apply_reflector(reflectors_[j], {rhs.data() + j, m_ - j});
  cvec x(n_);
  for (std::size_t jj = n_; jj-- > 0;) {
    cxd acc = rhs[jj];
    for (std::size_t c = jj + 1; c < n_; ++c) acc -= r_cols_[c][jj] * x[c];
    x[jj] = acc / r_cols_[jj][jj];
  }
  return x;
}

}  // namespace bsr

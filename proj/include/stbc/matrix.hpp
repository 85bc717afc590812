#pragma once

// Dense complex matrices for the small (<= 16 x 16) systems used by the
// decoders: Householder QR, left pseudo-inverse, Gram determinant and a
// one-sided Jacobi SVD.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stbc/error.hpp"

namespace stbc {

using cd = std::complex<double>;
using CVector = std::vector<cd>;

/// Relative singular-value threshold below which a matrix is treated as
/// rank deficient (sigma_min <= kRankTolerance * sigma_max).
inline constexpr double kRankTolerance = 1e-9;

class CMatrix {
 public:
  CMatrix() = default;

  CMatrix(std::size_t rows, std::size_t cols, cd fill = cd{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    check_finite();
  }

  CMatrix(std::size_t rows, std::size_t cols, std::vector<cd> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorCode::DimensionMismatch, "CMatrix data size does not match rows*cols");
    }
    check_finite();
  }

  CMatrix(std::initializer_list<std::initializer_list<cd>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "ragged initializer list");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static CMatrix identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMatrix diagonal(std::span<const cd> d) {
    CMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  cd& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cd& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const cd> data() const noexcept { return data_; }
  std::span<cd> data() noexcept { return data_; }

  CVector col(std::size_t c) const {
    CVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  void set_col(std::size_t c, std::span<const cd> v) {
    if (v.size() != rows_) throw Error(ErrorCode::DimensionMismatch, "set_col length");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
  }

  /// Columns `idx` in the given order.
  CMatrix select_cols(std::span<const int> idx) const {
    CMatrix out(rows_, idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
      for (std::size_t r = 0; r < rows_; ++r) out(r, j) = (*this)(r, static_cast<std::size_t>(idx[j]));
    return out;
  }

  CMatrix adjoint() const {
    CMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  CMatrix transpose() const {
    CMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  CMatrix conjugate() const {
    CMatrix out = *this;
    for (auto& x : out.data_) x = std::conj(x);
    return out;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return s;
  }

  double frobenius_norm() const { return std::sqrt(squared_norm()); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](cd x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
  }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](cd x) { return x == cd{}; });
  }

  CMatrix& operator+=(const CMatrix& o) {
    same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  CMatrix& operator*=(cd s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cd s) { return a *= s; }
  friend CMatrix operator*(cd s, CMatrix a) { return a *= s; }

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols_ != b.rows_) throw Error(ErrorCode::DimensionMismatch, "matrix product");
    CMatrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cd aik = a(i, k);
        if (aik == cd{}) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend CVector operator*(const CMatrix& a, std::span<const cd> x) {
    if (a.cols_ != x.size()) throw Error(ErrorCode::DimensionMismatch, "matrix-vector product");
    CVector y(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      cd s{};
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }
  friend CVector operator*(const CMatrix& a, const CVector& x) { return a * std::span<const cd>(x); }

 private:
  void check_finite() const {
    if (!all_finite()) throw Error(ErrorCode::NonFinite, "CMatrix entries must be finite");
  }
  void same_shape(const CMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw Error(ErrorCode::DimensionMismatch, "shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cd> data_;
};

/// Stack columns of m top to bottom (column-major vectorization).
inline CVector vec(const CMatrix& m) {
  CVector v;
  v.reserve(m.rows() * m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) v.push_back(m(r, c));
  return v;
}

inline CMatrix vstack(std::span<const CMatrix> blocks) {
  if (blocks.empty()) return {};
  std::size_t rows = 0;
  const std::size_t cols = blocks.front().cols();
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw Error(ErrorCode::DimensionMismatch, "vstack column count");
    rows += b.rows();
  }
  CMatrix out(rows, cols);
  std::size_t r0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < b.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r0 + r, c) = b(r, c);
    r0 += b.rows();
  }
  return out;
}

inline double squared_norm(std::span<const cd> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

/// Householder QR of an arbitrary n x k matrix. Reflectors are kept so Q^H
/// can be applied to vectors without forming Q. The diagonal of R is made
/// real and non-negative.
class HouseholderQr {
 public:
  explicit HouseholderQr(const CMatrix& m) : n_(m.rows()), k_(m.cols()), work_(m) {
    const std::size_t p = std::min(n_, k_);
    reflectors_.resize(p);
    phase_.assign(p, cd{1.0});
    for (std::size_t j = 0; j < p; ++j) {
      double normx2 = 0.0;
      for (std::size_t i = j; i < n_; ++i) normx2 += std::norm(work_(i, j));
      const double normx = std::sqrt(normx2);
      if (normx == 0.0) continue;
      const cd x0 = work_(j, j);
      const cd ph = std::abs(x0) == 0.0 ? cd{1.0} : x0 / std::abs(x0);
      const cd alpha = -ph * normx;
      CVector v(n_ - j);
      for (std::size_t i = j; i < n_; ++i) v[i - j] = work_(i, j);
      v[0] -= alpha;
      const double vn2 = squared_norm(v);
      for (std::size_t c = j + 1; c < k_; ++c) {
        cd w{};
        for (std::size_t i = j; i < n_; ++i) w += std::conj(v[i - j]) * work_(i, c);
        const cd f = 2.0 * w / vn2;
        for (std::size_t i = j; i < n_; ++i) work_(i, c) -= f * v[i - j];
      }
      work_(j, j) = alpha;
      for (std::size_t i = j + 1; i < n_; ++i) work_(i, j) = 0.0;
      reflectors_[j] = {std::move(v), vn2};
      phase_[j] = std::conj(alpha) / std::abs(alpha);
    }
  }

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return k_; }

  /// min(n,k) x k upper-trapezoidal factor with non-negative real diagonal.
  CMatrix r() const {
    const std::size_t p = std::min(n_, k_);
    CMatrix out(p, k_);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t c = i; c < k_; ++c) out(i, c) = phase_[i] * work_(i, c);
      out(i, i) = std::abs(out(i, i));
    }
    return out;
  }

  /// Q^H y for the full n x n unitary Q; entries past min(n,k) carry the
  /// component of y orthogonal to range(m).
  CVector apply_adjoint(std::span<const cd> y) const {
    if (y.size() != n_) throw Error(ErrorCode::DimensionMismatch, "apply_adjoint length");
    CVector out(y.begin(), y.end());
    for (std::size_t j = 0; j < reflectors_.size(); ++j) apply_reflector(j, out);
    for (std::size_t j = 0; j < phase_.size(); ++j) out[j] *= phase_[j];
    return out;
  }

  /// First min(n,k) columns of Q.
  CMatrix thin_q() const {
    const std::size_t p = std::min(n_, k_);
    CMatrix q(n_, p);
    for (std::size_t c = 0; c < p; ++c) {
      CVector e(n_);
      e[c] = 1.0;
      for (std::size_t j = reflectors_.size(); j-- > 0;) apply_reflector(j, e);
      for (std::size_t r = 0; r < n_; ++r) q(r, c) = e[r] * std::conj(phase_[c]);
    }
    return q;
  }

 private:
  struct Reflector {
    CVector v;
    double vn2 = 0.0;
  };

  void apply_reflector(std::size_t j, CVector& x) const {
    const auto& [v, vn2] = reflectors_[j];
    if (v.empty()) return;
    cd w{};
    for (std::size_t i = 0; i < v.size(); ++i) w += std::conj(v[i]) * x[j + i];
    const cd f = 2.0 * w / vn2;
    for (std::size_t i = 0; i < v.size(); ++i) x[j + i] -= f * v[i];
  }

  std::size_t n_;
  std::size_t k_;
  CMatrix work_;
  std::vector<Reflector> reflectors_;
  std::vector<cd> phase_;
};

struct QrThin {
  CMatrix q;  // n x k, orthonormal columns
  CMatrix r;  // k x k upper triangular, real non-negative diagonal
};

inline QrThin qr_thin(const CMatrix& m) {
  if (m.rows() < m.cols()) throw Error(ErrorCode::DimensionMismatch, "qr_thin requires rows >= cols");
  HouseholderQr qr(m);
  return {qr.thin_q(), qr.r()};
}

struct Svd {
  std::vector<double> sigma;  // descending, one per column of the input
  CMatrix v;                  // right singular vectors, column j pairs with sigma[j]
};

/// One-sided (Hestenes) Jacobi SVD. Wide inputs yield trailing zero
/// singular values, so sigma_min reflects column rank.
inline Svd svd_jacobi(const CMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  CMatrix a = m;
  CMatrix v = CMatrix::identity(k);
  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        double alpha = 0.0, beta = 0.0;
        cd gamma{};
        for (std::size_t i = 0; i < n; ++i) {
          alpha += std::norm(a(i, p));
          beta += std::norm(a(i, q));
          gamma += std::conj(a(i, p)) * a(i, q);
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const cd ph = gamma / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const cd ap = a(i, p);
          const cd aq = a(i, q) * std::conj(ph);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const cd vp = v(i, p);
          const cd vq = v(i, q) * std::conj(ph);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sigma(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::norm(a(i, j));
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(k);
  for (std::size_t j = 0; j < k; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
  Svd out{std::vector<double>(k), CMatrix(k, k)};
  for (std::size_t j = 0; j < k; ++j) {
    out.sigma[j] = sigma[order[j]];
    for (std::size_t i = 0; i < k; ++i) out.v(i, j) = v(i, order[j]);
  }
  return out;
}

inline double min_singular_value(const CMatrix& m) {
  if (m.empty()) return 0.0;
  return svd_jacobi(m).sigma.back();
}

/// sigma_min / sigma_max, 0 for the zero matrix.
inline double singular_ratio(const CMatrix& m) {
  if (m.empty()) return 0.0;
  const auto s = svd_jacobi(m).sigma;
  return s.front() == 0.0 ? 0.0 : s.back() / s.front();
}

inline bool has_full_column_rank(const CMatrix& m, double tol = kRankTolerance) {
  return m.rows() >= m.cols() && singular_ratio(m) > tol;
}

inline std::size_t numerical_rank(const CMatrix& m, double tol = kRankTolerance) {
  if (m.empty()) return 0;
  const auto s = svd_jacobi(m).sigma;
  if (s.front() == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](double x) { return x > tol * s.front(); }));
}

/// det(m^H m) as the squared product of R's diagonal.
inline double gram_det(const CMatrix& m) {
  if (m.rows() < m.cols()) return 0.0;
  const CMatrix r = HouseholderQr(m).r();
  double d = 1.0;
  for (std::size_t i = 0; i < r.rows(); ++i) d *= std::norm(r(i, i));
  return d;
}

/// Solve R x = b for upper-triangular R (k x k); b may have several columns.
inline CMatrix back_substitute(const CMatrix& r, const CMatrix& b) {
  const std::size_t k = r.cols();
  CMatrix x(k, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = k; i-- > 0;) {
      cd s = b(i, c);
      for (std::size_t j = i + 1; j < k; ++j) s -= r(i, j) * x(j, c);
      x(i, c) = s / r(i, i);
    }
  }
  return x;
}

/// Left pseudo-inverse (m^H m)^{-1} m^H via thin QR back-substitution.
inline CMatrix pinv_left(const CMatrix& m) {
  if (m.rows() < m.cols()) throw Error(ErrorCode::DimensionMismatch, "pinv_left requires rows >= cols");
  if (!has_full_column_rank(m)) throw Error(ErrorCode::RankDeficient, "pinv_left: matrix is rank deficient");
  const auto [q, r] = qr_thin(m);
  return back_substitute(r, q.adjoint());
}

}  // namespace stbc

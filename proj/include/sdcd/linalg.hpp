#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "sdcd/matrix.hpp"

namespace sdcd {

// ---------------------------------------------------------------------------
// LU factorization with partial pivoting
// ---------------------------------------------------------------------------

/// PA = LU, with L unit lower triangular stored below the diagonal of `lu`.
/// Pivot = largest absolute value in the column, ties go to the lowest row.
class LuFactors {
 public:
  explicit LuFactors(const Matrix& a) : lu_(a), perm_(a.rows()) {
    require_square(a, "lu_factorize");
    const std::size_t n = a.rows();
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          p = i;
        }
      }
      if (best == 0.0) {
        singular_ = true;
        continue;
      }
      if (p != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
        std::swap(perm_[k], perm_[p]);
        sign_ = -sign_;
      }
      const double pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double f = lu_(i, k) / pivot;
        lu_(i, k) = f;
        if (f == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
    if (singular_) {
      sign_ = 0;
      log_abs_det_ = -std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        if (lu_(k, k) < 0.0) sign_ = -sign_;
        log_abs_det_ += std::log(std::abs(lu_(k, k)));
      }
    }
  }

  bool singular() const noexcept { return singular_; }
  /// Sign of det(A) in {-1, 0, +1}.
  int sign() const noexcept { return sign_; }
  double log_abs_det() const noexcept { return log_abs_det_; }
  double det() const { return sign_ == 0 ? 0.0 : sign_ * std::exp(log_abs_det_); }
  const Matrix& packed() const noexcept { return lu_; }
  std::span<const std::size_t> permutation() const noexcept { return perm_; }

  std::vector<double> solve(std::span<const double> b) const {
    if (singular_) throw DomainError("lu solve: matrix is singular", 0);
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw DimensionError("lu solve: rhs size mismatch");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

  Matrix inverse() const {
    const std::size_t n = lu_.rows();
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = 1.0;
      const auto col = solve(e);
      e[j] = 0.0;
      for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
  }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
  double log_abs_det_ = 0.0;
  bool singular_ = false;
};

inline LuFactors lu_factorize(const Matrix& a) { return LuFactors(a); }

/// True when the Z-matrix `m` (nonpositive off-diagonal) is a nonsingular
/// M-matrix: every pivot of elimination without pivoting is positive.
/// For m = I - A with A >= 0 this is equivalent to rho(A) < 1.
inline bool is_nonsingular_m_matrix(const Matrix& m) {
  require_square(m, "is_nonsingular_m_matrix");
  Matrix w = m;
  const std::size_t n = w.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double pivot = w(k, k);
    if (!(pivot > 0.0)) return false;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = w(i, k) / pivot;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) w(i, j) -= f * w(k, j);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Matrix functions
// ---------------------------------------------------------------------------

inline constexpr int kExpTaylorOrder = 18;

/// exp(A) by scaling and squaring: A is scaled by 2^-s so that ||A/2^s||_1 <= 0.5,
/// a degree-18 Taylor polynomial is evaluated by Horner's rule, then squared s
/// times. Overflow is not clamped: entries that exceed the double range become
/// +inf and propagate through the remaining squarings.
inline Matrix matrix_exp(const Matrix& a) {
  require_square(a, "matrix_exp");
  const std::size_t n = a.rows();
  const double nrm = norm1(a);
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const Matrix b = std::ldexp(1.0, -s) * a;

  // Horner: e <- I + (b e) / k, scaled and shifted in place.
  Matrix e = Matrix::identity(n);
  for (int k = kExpTaylorOrder; k >= 1; --k) {
    e = matmul(b, e);
    const double inv_k = 1.0 / k;
    for (auto& x : e.data()) x *= inv_k;
    for (std::size_t i = 0; i < n; ++i) e(i, i) += 1.0;
  }
  for (int i = 0; i < s; ++i) e = matmul(e, e);
  return e;
}

/// A^k by repeated squaring; A^0 = I.
inline Matrix matrix_power(const Matrix& a, std::size_t k) {
  require_square(a, "matrix_power");
  Matrix result = Matrix::identity(a.rows());
  Matrix base = a;
  bool first = true;
  while (k > 0) {
    if (k & 1U) {
      result = first ? base : matmul(result, base);
      first = false;
    }
    k >>= 1U;
    if (k > 0) base = matmul(base, base);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

/// Left (u) and right (v) dominant eigenvector estimates, both unit norm,
/// plus the last eigenvalue estimate. Carried between calls for warm starts.
struct PowerIterState {
  std::vector<double> u;
  std::vector<double> v;
  double lambda = 0.0;

  static PowerIterState uniform(std::size_t d) {
    const double c = d == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(d));
    return {std::vector<double>(d, c), std::vector<double>(d, c), 0.0};
  }

  bool operator==(const PowerIterState&) const = default;
};

struct PowerIterResult {
  double lambda = 0.0;
  PowerIterState state;
  bool degenerate = false;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Runs `iters` updates u <- A^T u / ||A^T u||, v <- A v / ||A v|| and returns
/// the bilinear estimate u^T A v / u^T v. A product that vanishes identically
/// (nilpotent A) yields lambda = 0 and leaves that vector unchanged.
inline PowerIterResult power_iteration(const Matrix& a, PowerIterState state, std::size_t iters) {
  require_square(a, "power_iteration");
  const std::size_t d = a.rows();
  if (has_nan(a) || !all_finite(a)) throw NonFiniteError("power_iteration: non-finite input");
  if (state.u.size() != d || state.v.size() != d)
    throw DimensionError("power_iteration: state size differs from matrix size");

  bool vanished = d == 0;
  for (std::size_t it = 0; it < iters && !vanished; ++it) {
    auto nu = matvec_transposed(a, state.u);
    auto nv = matvec(a, state.v);
    const double su = norm2(nu);
    const double sv = norm2(nv);
    if (su == 0.0 || sv == 0.0) {
      vanished = true;
      break;
    }
    for (std::size_t i = 0; i < d; ++i) {
      state.u[i] = nu[i] / su;
      state.v[i] = nv[i] / sv;
    }
  }

  PowerIterResult out;
  if (vanished) {
    state.lambda = 0.0;
    out.lambda = 0.0;
    out.state = std::move(state);
    return out;
  }
  const double utv = dot(state.u, state.v);
  if (std::abs(utv) < 1e-12) {
    out.lambda = state.lambda;
    out.degenerate = true;
    out.state = std::move(state);
    return out;
  }
  const auto av = matvec(a, state.v);
  state.lambda = dot(state.u, av) / utv;
  out.lambda = state.lambda;
  out.state = std::move(state);
  return out;
}

}  // namespace sdcd

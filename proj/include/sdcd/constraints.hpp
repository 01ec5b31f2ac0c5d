#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdcd/graph.hpp"
#include "sdcd/linalg.hpp"
#include "sdcd/matrix.hpp"

namespace sdcd {

enum class ConstraintKind { Exp, Log, Inv, Binom, Spectral };

inline constexpr ConstraintKind kAllConstraints[] = {ConstraintKind::Exp, ConstraintKind::Log, ConstraintKind::Inv,
                                                     ConstraintKind::Binom, ConstraintKind::Spectral};

inline std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Exp: return "exp";
    case ConstraintKind::Log: return "log";
    case ConstraintKind::Inv: return "inv";
    case ConstraintKind::Binom: return "binom";
    case ConstraintKind::Spectral: return "rho";
  }
  return "?";
}

inline std::optional<ConstraintKind> parse_constraint_kind(std::string_view s) {
  for (auto k : kAllConstraints)
    if (to_string(k) == s) return k;
  if (s == "spectral") return ConstraintKind::Spectral;
  return std::nullopt;
}

/// Value and gradient of an acyclicity constraint; grad(i, j) = dh/dA(i, j).
struct ConstraintEval {
  double value = 0.0;
  Matrix grad;
  bool degenerate = false;
};

inline constexpr std::size_t kDefaultPowerIters = 15;

namespace detail {

inline void require_constraint_input(const Matrix& a, const char* who) {
  require_square(a, who);
  if (has_nan(a)) throw NonFiniteError(std::string(who) + ": NaN entry");
  if (has_negative(a)) throw InvalidArgument(std::string(who) + ": entries must be nonnegative");
}

// Domain of h_log / h_inv: rho(A) < 1, i.e. I - A is a nonsingular M-matrix.
inline LuFactors checked_i_minus_a(const Matrix& a, const char* who) {
  const Matrix m = Matrix::identity(a.rows()) - a;
  LuFactors lu(m);
  if (lu.sign() <= 0 || !is_nonsingular_m_matrix(m)) {
    throw DomainError(std::string(who) + ": spectral radius >= 1, det(I - A) sign " + std::to_string(lu.sign()),
                      lu.sign());
  }
  return lu;
}

}  // namespace detail

/// Tr exp(A) - d, gradient exp(A)^T.
inline ConstraintEval h_exp(const Matrix& a) {
  detail::require_constraint_input(a, "h_exp");
  const Matrix e = matrix_exp(a);
  return {trace(e) - static_cast<double>(a.rows()), transpose(e), false};
}

/// -log det(I - A), gradient (I - A)^{-T}.
inline ConstraintEval h_log(const Matrix& a) {
  detail::require_constraint_input(a, "h_log");
  const LuFactors lu = detail::checked_i_minus_a(a, "h_log");
  return {-lu.log_abs_det(), transpose(lu.inverse()), false};
}

/// Tr (I - A)^{-1} - d, gradient (I - A)^{-2 T}.
inline ConstraintEval h_inv(const Matrix& a) {
  detail::require_constraint_input(a, "h_inv");
  const Matrix inv = detail::checked_i_minus_a(a, "h_inv").inverse();
  return {trace(inv) - static_cast<double>(a.rows()), transpose(matmul(inv, inv)), false};
}

/// Tr (I + A)^k - d with k = d by default, gradient k (I + A)^{(k-1) T}.
inline ConstraintEval h_binom(const Matrix& a, std::optional<std::size_t> power = std::nullopt) {
  detail::require_constraint_input(a, "h_binom");
  const std::size_t d = a.rows();
  const std::size_t k = power.value_or(d);
  const Matrix base = Matrix::identity(d) + a;
  if (k == 0) return {0.0, Matrix(d, d), false};
  const Matrix pm1 = matrix_power(base, k - 1);
  const Matrix pk = matmul(pm1, base);
  return {trace(pk) - static_cast<double>(d), static_cast<double>(k) * transpose(pm1), false};
}

struct SpectralEval {
  ConstraintEval eval;
  PowerIterState state;
};

/// Spectral radius estimate from `iters` warm-started power iterations.
/// grad(i, j) = u_i v_j / (u^T v) with u the left and v the right eigenvector.
inline SpectralEval h_spectral(const Matrix& a, PowerIterState state, std::size_t iters = kDefaultPowerIters) {
  require_square(a, "h_spectral");
  if (has_nan(a)) throw NonFiniteError("h_spectral: NaN entry");
  if (has_negative(a)) throw InvalidArgument("h_spectral: entries must be nonnegative");
  const std::size_t d = a.rows();
  if (state.u.size() != d) state = PowerIterState::uniform(d);
  auto r = power_iteration(a, std::move(state), iters);
  SpectralEval out;
  out.eval.value = r.lambda;
  out.eval.degenerate = r.degenerate;
  out.eval.grad = Matrix(d, d);
  const double utv = dot(r.state.u, r.state.v);
  if (!r.degenerate && r.lambda != 0.0 && utv != 0.0) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) out.eval.grad(i, j) = r.state.u[i] * r.state.v[j] / utv;
  }
  out.state = std::move(r.state);
  return out;
}

/// Evaluates any constraint kind; the spectral one starts from a uniform state.
inline ConstraintEval evaluate_constraint(ConstraintKind kind, const Matrix& a,
                                          std::size_t power_iters = kDefaultPowerIters) {
  switch (kind) {
    case ConstraintKind::Exp: return h_exp(a);
    case ConstraintKind::Log: return h_log(a);
    case ConstraintKind::Inv: return h_inv(a);
    case ConstraintKind::Binom: return h_binom(a);
    case ConstraintKind::Spectral: return h_spectral(a, PowerIterState::uniform(a.rows()), power_iters).eval;
  }
  throw InvalidArgument("unknown constraint kind");
}

/// Weighted cycle 0 -> 1 -> ... -> length-1 -> 0 inside a d x d zero matrix.
inline Matrix cycle_matrix(std::size_t d, double w, std::optional<std::size_t> length = std::nullopt) {
  const std::size_t len = length.value_or(d);
  if (d < 2) throw InvalidArgument("cycle_matrix: d must be >= 2");
  if (len < 2 || len > d) throw InvalidArgument("cycle_matrix: cycle length must be in [2, d]");
  if (w < 0.0) throw InvalidArgument("cycle_matrix: weight must be nonnegative");
  Matrix c(d, d);
  for (std::size_t i = 0; i < len; ++i) c(i, (i + 1) % len) = w;
  return c;
}

/// Off-diagonal entries uniform in [0, eps], zero diagonal.
inline Matrix uniform_matrix(std::size_t d, double eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) a(i, j) = eps * dist(rng);
  return a;
}

// ---------------------------------------------------------------------------
// Stability probe
// ---------------------------------------------------------------------------

struct CycleFamily {
  double w = 0.5;
  std::optional<std::size_t> length;  // defaults to the full cycle of length d
};

struct UniformFamily {
  double eps = 1.0;
  std::uint64_t seed = 0;
};

using ProbeFamily = std::variant<CycleFamily, UniformFamily>;

enum class ProbeStatus { Ok, UnderflowToZero, OverflowToInf, DomainError };

inline std::string_view to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::Ok: return "ok";
    case ProbeStatus::UnderflowToZero: return "underflow-to-zero";
    case ProbeStatus::OverflowToInf: return "overflow-to-inf";
    case ProbeStatus::DomainError: return "domain-error";
  }
  return "?";
}

struct ProbeRow {
  std::size_t d = 0;
  ConstraintKind constraint = ConstraintKind::Exp;
  std::string family;
  double scale = 0.0;
  double value = 0.0;
  ProbeStatus status = ProbeStatus::Ok;
};

inline constexpr double kUnderflowValue = 1e-100;

inline Matrix probe_matrix(const ProbeFamily& family, std::size_t d) {
  if (const auto* c = std::get_if<CycleFamily>(&family)) {
    std::optional<std::size_t> len = c->length;
    if (len && *len > d) len = d;
    return cycle_matrix(d, c->w, len);
  }
  const auto& u = std::get<UniformFamily>(family);
  return uniform_matrix(d, u.eps, u.seed + d);
}

/// Evaluates `kind` on the probe matrix of every d and classifies the outcome.
/// A cyclic probe whose value falls below 1e-100 counts as an underflow.
inline std::vector<ProbeRow> stability_probe(ConstraintKind kind, const ProbeFamily& family,
                                             const std::vector<std::size_t>& d_list,
                                             std::size_t power_iters = kDefaultPowerIters) {
  std::vector<ProbeRow> rows;
  const bool cycle = std::holds_alternative<CycleFamily>(family);
  const double scale = cycle ? std::get<CycleFamily>(family).w : std::get<UniformFamily>(family).eps;
  for (std::size_t d : d_list) {
    ProbeRow row{d, kind, cycle ? "cycle" : "uniform", scale, 0.0, ProbeStatus::Ok};
    const Matrix a = probe_matrix(family, d);
    try {
      row.value = evaluate_constraint(kind, a, power_iters).value;
      if (!std::isfinite(row.value)) {
        row.status = ProbeStatus::OverflowToInf;
      } else if (std::abs(row.value) < kUnderflowValue && !is_acyclic(threshold(a, 1e-300))) {
        row.status = ProbeStatus::UnderflowToZero;
      }
    } catch (const DomainError&) {
      row.value = std::numeric_limits<double>::quiet_NaN();
      row.status = ProbeStatus::DomainError;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_probe_csv_header(std::ostream& os) { os << "d,constraint,family,scale,value,status\n"; }

inline void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows) {
  for (const auto& r : rows) {
    os << r.d << ',' << to_string(r.constraint) << ',' << r.family << ',' << format_double(r.scale) << ','
       << format_double(r.value) << ',' << to_string(r.status) << '\n';
  }
}

}  // namespace sdcd

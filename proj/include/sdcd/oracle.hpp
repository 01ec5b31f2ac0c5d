#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "sdcd/constraints.hpp"
#include "sdcd/dataset.hpp"
#include "sdcd/graph.hpp"
#include "sdcd/linalg.hpp"
#include "sdcd/matrix.hpp"

// Brute-force references, deliberately independent of the fast paths they check.
namespace sdcd::oracle {

/// Gelfand estimate ||A^(2^m)||^(1/2^m) in the induced infinity-norm. Each
/// squaring is renormalized and the log scale accumulated, so nothing
/// overflows; an exactly nilpotent matrix returns 0.
inline double spectral_radius_oracle(const Matrix& a, int m = 30) {
  require_square(a, "spectral_radius_oracle");
  const double n0 = norm_inf(a);
  if (n0 == 0.0) return 0.0;
  Matrix b = (1.0 / n0) * a;
  double log_scale = std::log(n0);
  for (int k = 1; k <= m; ++k) {
    b = matmul(b, b);
    const double nk = norm_inf(b);
    if (nk == 0.0) return 0.0;
    const double inv = 1.0 / nk;
    for (auto& x : b.data()) x *= inv;
    log_scale = 2.0 * log_scale + std::log(nk);
  }
  return std::exp(std::ldexp(log_scale, -m));
}

/// Truncated power series sum_{k=1}^{k_max} a_k Tr(A^k) with
/// a_k = 1/k! (Exp), 1/k (Log) or 1 (Inv).
inline double pst_series_oracle(ConstraintKind kind, const Matrix& a, std::size_t k_max) {
  require_square(a, "pst_series_oracle");
  if (k_max < 40) throw InvalidArgument("pst_series_oracle: k_max must be >= 40");
  if (kind != ConstraintKind::Exp && kind != ConstraintKind::Log && kind != ConstraintKind::Inv)
    throw InvalidArgument("pst_series_oracle: only exp, log and inv have a series oracle");
  if (kind != ConstraintKind::Exp && spectral_radius_oracle(a) >= 0.9)
    throw InvalidArgument("pst_series_oracle: spectral radius too large for series convergence");
  double sum = 0.0;
  double fact = 1.0;
  Matrix power = a;
  for (std::size_t k = 1; k <= k_max; ++k) {
    fact *= static_cast<double>(k);
    double coef = 1.0;
    if (kind == ConstraintKind::Exp) coef = 1.0 / fact;
    if (kind == ConstraintKind::Log) coef = 1.0 / static_cast<double>(k);
    sum += coef * trace(power);
    if (k < k_max) power = matmul(power, a);
  }
  return sum;
}

/// Central differences, one entry at a time. Errors raised by f at a
/// perturbed point propagate to the caller.
inline Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& a, double step) {
  Matrix g(a.rows(), a.cols());
  Matrix x = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double orig = x(i, j);
      x(i, j) = orig + step;
      const double fp = f(x);
      x(i, j) = orig - step;
      const double fm = f(x);
      x(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * step);
    }
  return g;
}

/// counts[k] = number of closed walks (i_0, ..., i_k), i_0 = i_k, along edges
/// of g, for k = 1..k_max. counts[0] is unused.
inline std::vector<std::uint64_t> enumerate_cycles(const DiGraph& g, std::size_t k_max) {
  const std::size_t d = g.num_nodes();
  if (d > 12) throw InvalidArgument("enumerate_cycles: exhaustive enumeration limited to d <= 12");
  std::vector<std::uint64_t> counts(k_max + 1, 0);
  std::vector<std::vector<std::size_t>> succ(d);
  for (auto [i, j] : g.edges()) succ[i].push_back(j);
  // Explicit DFS over walk prefixes: (node, depth).
  for (std::size_t start = 0; start < d; ++start) {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    while (!stack.empty()) {
      const auto [v, depth] = stack.back();
      stack.pop_back();
      if (depth == k_max) continue;
      for (std::size_t w : succ[v]) {
        if (w == start) ++counts[depth + 1];
        stack.emplace_back(w, depth + 1);
      }
    }
  }
  return counts;
}

/// Variance-sorting baseline: order variables by increasing observational
/// variance, regress each on all its predecessors by least squares, and keep
/// predecessors whose coefficient exceeds `coef_threshold` in magnitude.
inline DiGraph sortnregress(const Dataset& data, double coef_threshold = 0.05) {
  const auto rows = data.observational_rows();
  const std::size_t d = data.d();
  const std::size_t n = rows.size();
  if (n < d + 1) throw InvalidArgument("sortnregress: need at least d + 1 observational rows");

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.x(r, j);
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = data.x(r, j) - mean[j];
      var[j] += c * c;
    }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return var[a] < var[b]; });

  DiGraph g(d);
  for (std::size_t pos = 1; pos < d; ++pos) {
    const std::size_t target = order[pos];
    Matrix gram(pos, pos);
    std::vector<double> rhs(pos, 0.0);
    for (std::size_t r : rows) {
      for (std::size_t a = 0; a < pos; ++a) {
        const double xa = data.x(r, order[a]) - mean[order[a]];
        rhs[a] += xa * (data.x(r, target) - mean[target]);
        for (std::size_t b = 0; b < pos; ++b) gram(a, b) += xa * (data.x(r, order[b]) - mean[order[b]]);
      }
    }
    const LuFactors lu(gram);
    if (lu.singular()) continue;
    const auto coef = lu.solve(rhs);
    for (std::size_t a = 0; a < pos; ++a)
      if (std::abs(coef[a]) > coef_threshold) g.add_edge(order[a], target);
  }
  return g;
}

struct OracleReport {
  std::string quantity;
  double oracle_value = 0.0;
  double subject_value = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
};

inline OracleReport make_report(std::string quantity, double oracle_value, double subject_value) {
  const double abs_err = std::abs(subject_value - oracle_value);
  const double denom = std::max(std::abs(oracle_value), 1e-300);
  return {std::move(quantity), oracle_value, subject_value, abs_err, abs_err / denom};
}

inline void write_report_csv(std::ostream& os, const std::vector<OracleReport>& reports, bool header = true) {
  if (header) os << "quantity,oracle_value,subject_value,abs_err,rel_err\n";
  for (const auto& r : reports)
    os << r.quantity << ',' << format_double(r.oracle_value) << ',' << format_double(r.subject_value) << ','
       << format_double(r.abs_err) << ',' << format_double(r.rel_err) << '\n';
}

}  // namespace sdcd::oracle

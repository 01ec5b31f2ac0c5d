#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdcd/constraints.hpp"
#include "sdcd/dataset.hpp"
#include "sdcd/errors.hpp"
#include "sdcd/graph.hpp"
#include "sdcd/matrix.hpp"

namespace sdcd {

/// Every learnable tensor of the masked conditional-Gaussian network.
///
/// Target j owns a hidden layer of width h fed by the other variables:
///   hid_j = sigmoid(sum_i w_in[j][i][:] x_i + b_in[j][:])
///   mu_j  = w_mu[j] . hid_j + c_mu[j]
///   var_j = softplus(w_var[j] . hid_j + c_var[j])
/// w_in is stored flat with index (j * d + i) * h + m.
struct ParamBlock {
  std::size_t d = 0;
  std::size_t h = 0;
  std::vector<double> w_in;
  std::vector<double> b_in;
  std::vector<double> w_mu;
  std::vector<double> c_mu;
  std::vector<double> w_var;
  std::vector<double> c_var;

  static ParamBlock zeros(std::size_t d, std::size_t h) {
    return {d, h, std::vector<double>(d * d * h, 0.0), std::vector<double>(d * h, 0.0),
            std::vector<double>(d * h, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d * h, 0.0),
            std::vector<double>(d, 0.0)};
  }

  std::size_t w_index(std::size_t target, std::size_t input, std::size_t m) const noexcept {
    return (target * d + input) * h + m;
  }

  template <class F>
  void for_each_tensor(F&& f) {
    f(w_in);
    f(b_in);
    f(w_mu);
    f(c_mu);
    f(w_var);
    f(c_var);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    f(w_in);
    f(b_in);
    f(w_mu);
    f(c_mu);
    f(w_var);
    f(c_var);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::vector<double>& t) { n += t.size(); });
    return n;
  }

  bool operator==(const ParamBlock&) const = default;
};

/// mask[j * d + i] == 1 means input i is permitted for target j.
using InputMask = std::vector<unsigned char>;

struct ModelParams : ParamBlock {
  InputMask mask;
  std::uint64_t seed = 0;

  bool permitted(std::size_t target, std::size_t input) const noexcept { return mask[target * d + input] != 0; }

  bool operator==(const ModelParams&) const = default;
};

struct Gradients : ParamBlock {
  static Gradients zeros_like(const ParamBlock& p) { return {ParamBlock::zeros(p.d, p.h)}; }
};

inline InputMask self_loop_mask(std::size_t d) {
  InputMask m(d * d, 1);
  for (std::size_t j = 0; j < d; ++j) m[j * d + j] = 0;
  return m;
}

/// Masks out every removed edge (i -> j) in addition to self-loops.
inline InputMask mask_without(std::size_t d, const std::vector<Edge>& removed) {
  InputMask m = self_loop_mask(d);
  for (auto [i, j] : removed) {
    if (i >= d || j >= d) throw InvalidArgument("mask_without: edge index out of range");
    m[j * d + i] = 0;
  }
  return m;
}

inline double softplus(double s) { return s > 30.0 ? s : std::log1p(std::exp(s)); }
inline double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

/// Gaussian weights with std 1/sqrt(fan-in), zero biases, and c_var set so
/// that the predicted variance starts near 1. Masked weights are exactly 0.
inline ModelParams init_params(std::size_t d, std::size_t h, const InputMask& mask, std::uint64_t seed) {
  if (mask.size() != d * d) throw DimensionError("init_params: mask must be d x d");
  for (std::size_t j = 0; j < d; ++j)
    if (mask[j * d + j]) throw InvalidArgument("init_params: mask diagonal must be false");
  ModelParams p;
  static_cast<ParamBlock&>(p) = ParamBlock::zeros(d, h);
  p.mask = mask;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::size_t fan_in = 0;
    for (std::size_t i = 0; i < d; ++i) fan_in += mask[j * d + i];
    const double scale = fan_in ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t m = 0; m < h; ++m) {
        const double w = normal(rng) * scale;
        p.w_in[p.w_index(j, i, m)] = mask[j * d + i] ? w : 0.0;
      }
  }
  const double head_scale = h ? 1.0 / std::sqrt(static_cast<double>(h)) : 0.0;
  for (auto& w : p.w_mu) w = normal(rng) * head_scale;
  for (auto& w : p.w_var) w = normal(rng) * head_scale;
  for (auto& c : p.c_var) c = softplus_inverse(1.0);
  return p;
}

/// A(i, j) = ||w_in[j][i][:]||_2, the weight of edge i -> j.
inline Matrix adjacency(const ModelParams& p) {
  Matrix a(p.d, p.d);
  for (std::size_t j = 0; j < p.d; ++j)
    for (std::size_t i = 0; i < p.d; ++i) {
      if (i == j || !p.permitted(j, i)) continue;
      double s = 0.0;
      const double* w = &p.w_in[p.w_index(j, i, 0)];
      for (std::size_t m = 0; m < p.h; ++m) s += w[m] * w[m];
      a(i, j) = std::sqrt(s);
    }
  return a;
}

struct Prediction {
  std::vector<double> mu;
  std::vector<double> var;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> active_inputs(const ModelParams& p) {
  std::vector<std::vector<std::size_t>> act(p.d);
  for (std::size_t j = 0; j < p.d; ++j)
    for (std::size_t i = 0; i < p.d; ++i)
      if (i != j && p.permitted(j, i)) act[j].push_back(i);
  return act;
}

struct RowScratch {
  explicit RowScratch(std::size_t h) : hid(h), dpre(h) {}
  std::vector<double> hid;
  std::vector<double> dpre;
};

// Hidden activations, mean and variance of target j for one sample row.
inline std::pair<double, double> predict_target(const ModelParams& p, const std::vector<std::size_t>& inputs,
                                                const double* x, std::size_t j, double* hid) {
  const std::size_t h = p.h;
  const double* b = &p.b_in[j * h];
  for (std::size_t m = 0; m < h; ++m) hid[m] = b[m];
  for (std::size_t i : inputs) {
    const double xi = x[i];
    const double* w = &p.w_in[p.w_index(j, i, 0)];
    for (std::size_t m = 0; m < h; ++m) hid[m] += w[m] * xi;
  }
  double mu = p.c_mu[j];
  double s = p.c_var[j];
  const double* wm = &p.w_mu[j * h];
  const double* wv = &p.w_var[j * h];
  for (std::size_t m = 0; m < h; ++m) {
    hid[m] = sigmoid(hid[m]);
    mu += wm[m] * hid[m];
    s += wv[m] * hid[m];
  }
  return {mu, s};
}

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

// Sum over kept targets of the negative log-density of one row. When `g` is
// set, accumulates scale * d(row nll)/d(theta) into it.
inline double row_nll(const ModelParams& p, const std::vector<std::vector<std::size_t>>& active, const double* x,
                      const unsigned char* keep, Gradients* g, double scale, RowScratch& scratch) {
  const std::size_t h = p.h;
  double total = 0.0;
  for (std::size_t j = 0; j < p.d; ++j) {
    if (!keep[j]) continue;
    double* hid = scratch.hid.data();
    const auto [mu, s] = predict_target(p, active[j], x, j, hid);
    const double var = softplus(s);
    const double r = x[j] - mu;
    total += kHalfLog2Pi + 0.5 * std::log(var) + r * r / (2.0 * var);
    if (!g) continue;

    const double dmu = -r / var * scale;
    const double dvar = (0.5 / var - r * r / (2.0 * var * var)) * scale;
    const double ds = dvar * sigmoid(s);
    const double* wm = &p.w_mu[j * h];
    const double* wv = &p.w_var[j * h];
    double* gwm = &g->w_mu[j * h];
    double* gwv = &g->w_var[j * h];
    double* gb = &g->b_in[j * h];
    double* dpre = scratch.dpre.data();
    for (std::size_t m = 0; m < h; ++m) {
      gwm[m] += dmu * hid[m];
      gwv[m] += ds * hid[m];
      dpre[m] = (dmu * wm[m] + ds * wv[m]) * hid[m] * (1.0 - hid[m]);
      gb[m] += dpre[m];
    }
    g->c_mu[j] += dmu;
    g->c_var[j] += ds;
    for (std::size_t i : active[j]) {
      const double xi = x[i];
      double* gw = &g->w_in[p.w_index(j, i, 0)];
      for (std::size_t m = 0; m < h; ++m) gw[m] += dpre[m] * xi;
    }
  }
  return total;
}

inline void check_row_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw NonFiniteError("forward: non-finite input");
}

}  // namespace detail

inline Prediction forward(const ModelParams& p, std::span<const double> x) {
  if (x.size() != p.d) throw DimensionError("forward: input size differs from d");
  detail::check_row_finite(x);
  const auto active = detail::active_inputs(p);
  std::vector<double> hid(p.h);
  Prediction out{std::vector<double>(p.d), std::vector<double>(p.d)};
  for (std::size_t j = 0; j < p.d; ++j) {
    const auto [mu, s] = detail::predict_target(p, active[j], x.data(), j, hid.data());
    out.mu[j] = mu;
    out.var[j] = softplus(s);
  }
  return out;
}

inline void check_batch(const ModelParams& p, const Dataset& data, std::span<const std::size_t> rows) {
  if (data.d() != p.d) throw DimensionError("model: dataset width differs from d");
  for (std::size_t r : rows)
    if (r >= data.n()) throw DimensionError("model: row index out of range");
}

/// Mean over `rows` of the negative log-likelihood, skipping intervened targets.
inline double gaussian_nll(const ModelParams& p, const Dataset& data, std::span<const std::size_t> rows) {
  check_batch(p, data, rows);
  if (rows.empty()) return 0.0;
  const auto active = detail::active_inputs(p);
  const auto keep = data.likelihood_mask();
  detail::RowScratch scratch(p.h);
  double total = 0.0;
  for (std::size_t r : rows)
    total += detail::row_nll(p, active, data.x.row(r).data(), &keep[data.regime[r] * p.d], nullptr, 0.0, scratch);
  return total / static_cast<double>(rows.size());
}

inline double gaussian_nll(const ModelParams& p, const Dataset& data) {
  std::vector<std::size_t> rows(data.n());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return gaussian_nll(p, data, rows);
}

struct LossWeights {
  double alpha = 0.0;  // L1 on the induced adjacency
  double beta = 0.0;   // squared L2 on all parameters
  double gamma = 0.0;  // acyclicity penalty
};

struct LossTerms {
  double nll = 0.0;
  double l1 = 0.0;          // sum of A(i, j)
  double l2 = 0.0;          // sum of theta^2
  double constraint = 0.0;  // h(A) as supplied
  double total = 0.0;

  /// Name of the first non-finite term, or empty.
  std::string non_finite_term() const {
    if (!std::isfinite(nll)) return "nll";
    if (!std::isfinite(l1)) return "l1";
    if (!std::isfinite(l2)) return "l2";
    if (!std::isfinite(constraint)) return "constraint";
    if (!std::isfinite(total)) return "total";
    return {};
  }
};

struct LossAndGradients {
  LossTerms terms;
  Gradients grad;
};

/// Minimized stage loss: nll + alpha ||A||_1 + beta ||theta||^2 + gamma h(A),
/// with exact reverse-mode gradients. The adjacency terms chain through the
/// group norm: dW[j][i][:] += (alpha + gamma dh/dA(i,j)) W[j][i][:] / A(i,j),
/// with zero subgradient for groups that are exactly zero.
inline LossAndGradients loss_and_gradients(const ModelParams& p, const Dataset& data,
                                           std::span<const std::size_t> rows, const LossWeights& w,
                                           const ConstraintEval* constraint = nullptr) {
  check_batch(p, data, rows);
  if (w.gamma > 0.0 && !constraint) throw InvalidArgument("loss_and_gradients: gamma > 0 requires a constraint");
  if (constraint && w.gamma > 0.0 && (constraint->grad.rows() != p.d || constraint->grad.cols() != p.d))
    throw DimensionError("loss_and_gradients: constraint gradient must be d x d");

  LossAndGradients out{{}, Gradients::zeros_like(p)};
  Gradients& g = out.grad;
  if (!rows.empty()) {
    const auto active = detail::active_inputs(p);
    const auto keep = data.likelihood_mask();
    detail::RowScratch scratch(p.h);
    const double scale = 1.0 / static_cast<double>(rows.size());
    double total = 0.0;
    for (std::size_t r : rows)
      total += detail::row_nll(p, active, data.x.row(r).data(), &keep[data.regime[r] * p.d], &g, scale, scratch);
    out.terms.nll = total * scale;
  }

  const std::size_t d = p.d;
  const std::size_t h = p.h;
  const bool use_constraint = constraint && w.gamma > 0.0;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) {
      if (i == j || !p.permitted(j, i)) continue;
      const double* wt = &p.w_in[p.w_index(j, i, 0)];
      double s = 0.0;
      for (std::size_t m = 0; m < h; ++m) s += wt[m] * wt[m];
      const double a = std::sqrt(s);
      out.terms.l1 += a;
      if (a == 0.0) continue;
      const double coef = w.alpha + (use_constraint ? w.gamma * constraint->grad(i, j) : 0.0);
      if (coef == 0.0) continue;
      double* gw = &g.w_in[p.w_index(j, i, 0)];
      for (std::size_t m = 0; m < h; ++m) gw[m] += coef * wt[m] / a;
    }

  double l2 = 0.0;
  p.for_each_tensor([&](const std::vector<double>& t) {
    for (double v : t) l2 += v * v;
  });
  out.terms.l2 = l2;
  if (w.beta != 0.0) {
    auto add_decay = [&](std::vector<double>& gt, const std::vector<double>& pt) {
      for (std::size_t k = 0; k < gt.size(); ++k) gt[k] += 2.0 * w.beta * pt[k];
    };
    add_decay(g.w_in, p.w_in);
    add_decay(g.b_in, p.b_in);
    add_decay(g.w_mu, p.w_mu);
    add_decay(g.c_mu, p.c_mu);
    add_decay(g.w_var, p.w_var);
    add_decay(g.c_var, p.c_var);
  }

  out.terms.constraint = constraint ? constraint->value : 0.0;
  out.terms.total = out.terms.nll + w.alpha * out.terms.l1 + w.beta * out.terms.l2 +
                    (use_constraint ? w.gamma * constraint->value : 0.0);
  return out;
}

}  // namespace sdcd

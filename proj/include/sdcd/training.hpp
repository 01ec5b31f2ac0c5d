#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sdcd/constraints.hpp"
#include "sdcd/dataset.hpp"
#include "sdcd/graph.hpp"
#include "sdcd/model.hpp"
#include "sdcd/oracle.hpp"
#include "sdcd/simulate.hpp"

namespace sdcd {

/// Hyperparameters of both stages. Defaults are the published settings.
struct TrainConfig {
  double alpha1 = 1e-2;
  double beta1 = 2e-4;
  double eta1 = 2e-3;
  double tau1 = 0.2;
  double alpha2 = 5e-4;
  double beta2 = 5e-3;
  double eta2 = 1e-3;
  double gamma_inc = 0.005;
  double tau2 = 0.1;
  std::size_t epochs1 = 2000;
  std::size_t epochs2 = 2000;
  std::size_t batch_size = 256;
  double val_fraction = 0.2;
  std::size_t check_period = 20;
  std::size_t patience = 20;  // validation checks without a new minimum; 0 disables early stopping
  std::size_t power_iters = kDefaultPowerIters;
  std::uint64_t seed = 0;
  std::size_t hidden = 10;
  bool warm_start_stage2 = false;
  bool log_spectral_oracle = false;  // also log the exact spectral radius each stage-2 epoch
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct AdamState {
  Gradients m;
  Gradients v;
  std::size_t step = 0;

  static AdamState zeros_like(const ParamBlock& p) { return {Gradients::zeros_like(p), Gradients::zeros_like(p), 0}; }
};

namespace detail {

inline void zero_masked_inputs(ParamBlock& t, const InputMask& mask) {
  for (std::size_t j = 0; j < t.d; ++j)
    for (std::size_t i = 0; i < t.d; ++i)
      if (!mask[j * t.d + i])
        for (std::size_t m = 0; m < t.h; ++m) t.w_in[t.w_index(j, i, m)] = 0.0;
}

inline void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                        std::vector<double>& v, double step_size, double bc2) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
    v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
    p[k] -= step_size * m[k] / (std::sqrt(v[k] / bc2) + kAdamEps);
  }
}

}  // namespace detail

/// One bias-corrected Adam step in place. Masked input weights stay exactly 0.
inline void adam_step(ModelParams& p, const Gradients& g, AdamState& s, double lr) {
  if (g.d != p.d || g.h != p.h || s.m.d != p.d || s.m.h != p.h) throw DimensionError("adam_step: shape mismatch");
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
  const double step_size = lr / bc1;
  detail::adam_update(p.w_in, g.w_in, s.m.w_in, s.v.w_in, step_size, bc2);
  detail::adam_update(p.b_in, g.b_in, s.m.b_in, s.v.b_in, step_size, bc2);
  detail::adam_update(p.w_mu, g.w_mu, s.m.w_mu, s.v.w_mu, step_size, bc2);
  detail::adam_update(p.c_mu, g.c_mu, s.m.c_mu, s.v.c_mu, step_size, bc2);
  detail::adam_update(p.w_var, g.w_var, s.m.w_var, s.v.w_var, step_size, bc2);
  detail::adam_update(p.c_var, g.c_var, s.m.c_var, s.v.c_var, step_size, bc2);
  detail::zero_masked_inputs(p, p.mask);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainLogRecord {
  int stage = 1;
  std::size_t epoch = 0;  // 1-based within the stage
  double train_loss = 0.0;
  std::optional<double> val_recon_loss;  // set on validation-check epochs
  double gamma = 0.0;                    // penalty weight used during this epoch
  double h_value = 0.0;                  // spectral estimate at the epoch's last step
  std::optional<double> h_oracle;        // exact spectral radius of the same matrix
  bool is_dag_at_tau2 = false;
  bool frozen = false;  // gamma is held for the next epoch
};

enum class StopReason { Completed, EarlyStopped, NonFinite };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Completed: return "completed";
    case StopReason::EarlyStopped: return "early_stopped";
    case StopReason::NonFinite: return "non_finite";
  }
  return "?";
}

struct StageResult {
  ModelParams params;
  std::vector<TrainLogRecord> log;
  StopReason reason = StopReason::Completed;
  std::string diagnostic;
  std::size_t epochs_run = 0;
};

struct Stage1Result : StageResult {
  std::vector<Edge> removed;
};

using LogSink = std::function<void(const TrainLogRecord&)>;

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Uniformly random validation subset of round(val_fraction * n) rows, fixed by the seed.
inline DataSplit make_split(std::size_t n, double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw InvalidArgument("val_fraction must lie in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  if (val_fraction > 0.0 && n_val == 0 && n > 1) n_val = 1;
  DataSplit s;
  s.val.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

/// Consecutive batches of the shuffled rows; a final remainder of fewer than
/// two rows is dropped.
inline std::vector<std::span<const std::size_t>> make_batches(std::span<const std::size_t> rows,
                                                              std::size_t batch_size) {
  std::vector<std::span<const std::size_t>> out;
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, rows.size() - start);
    if (len < 2 && !out.empty()) break;
    out.push_back(rows.subspan(start, len));
  }
  return out;
}

namespace detail {

inline void validate_config(const TrainConfig& c) {
  if (c.batch_size == 0) throw InvalidArgument("config: batch_size must be positive");
  if (c.check_period == 0) throw InvalidArgument("config: check_period must be positive");
  if (c.hidden == 0) throw InvalidArgument("config: hidden must be positive");
  if (c.val_fraction < 0.0 || c.val_fraction >= 1.0) throw InvalidArgument("config: val_fraction must lie in [0, 1)");
  for (double v : {c.alpha1, c.beta1, c.eta1, c.tau1, c.alpha2, c.beta2, c.eta2, c.gamma_inc, c.tau2})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("config: coefficients must be finite and >= 0");
}

struct EarlyStopper {
  double best = std::numeric_limits<double>::infinity();
  std::size_t bad_checks = 0;

  // Returns true when patience is exhausted.
  bool observe(double val, std::size_t patience) {
    if (val < best) {
      best = val;
      bad_checks = 0;
    } else {
      ++bad_checks;
    }
    return patience > 0 && bad_checks >= patience;
  }
  void reset() { *this = EarlyStopper{}; }
};

struct StageSettings {
  int stage = 1;
  LossWeights weights;
  double lr = 0.0;
  std::size_t epochs = 0;
  std::uint64_t shuffle_seed = 0;
};

inline StageResult run_stage(const Dataset& data, const DataSplit& split, ModelParams params,
                             const StageSettings& st, const TrainConfig& cfg, const LogSink& sink) {
  StageResult res;
  AdamState adam = AdamState::zeros_like(params);
  std::mt19937_64 rng(st.shuffle_seed);
  std::vector<std::size_t> order = split.train;
  EarlyStopper stopper;
  PowerIterState power = PowerIterState::uniform(params.d);
  double gamma = 0.0;
  bool frozen = false;
  const bool constrained = st.stage == 2;

  for (std::size_t epoch = 1; epoch <= st.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    TrainLogRecord rec;
    rec.stage = st.stage;
    rec.epoch = epoch;
    rec.gamma = constrained ? gamma : 0.0;

    LossWeights w = st.weights;
    w.gamma = rec.gamma;
    double loss_sum = 0.0;
    std::size_t loss_rows = 0;
    Matrix last_adjacency;
    for (auto rows : make_batches(order, cfg.batch_size)) {
      std::optional<ConstraintEval> constraint;
      if (constrained) {
        last_adjacency = adjacency(params);
        auto sp = h_spectral(last_adjacency, std::move(power), cfg.power_iters);
        power = std::move(sp.state);
        rec.h_value = sp.eval.value;
        constraint = std::move(sp.eval);
      }
      const auto lg = loss_and_gradients(params, data, rows, w, constraint ? &*constraint : nullptr);
      const std::string bad = lg.terms.non_finite_term();
      if (!bad.empty()) {
        res.reason = StopReason::NonFinite;
        res.diagnostic = "stage " + std::to_string(st.stage) + " epoch " + std::to_string(epoch) +
                         ": non-finite " + bad + " term";
        rec.train_loss = lg.terms.total;
        res.log.push_back(rec);
        if (sink) sink(rec);
        res.params = std::move(params);
        res.epochs_run = epoch;
        return res;
      }
      adam_step(params, lg.grad, adam, st.lr);
      loss_sum += lg.terms.total * static_cast<double>(rows.size());
      loss_rows += rows.size();
    }
    rec.train_loss = loss_rows ? loss_sum / static_cast<double>(loss_rows) : 0.0;
    if (constrained && cfg.log_spectral_oracle && last_adjacency.rows() == params.d)
      rec.h_oracle = oracle::spectral_radius_oracle(last_adjacency);

    const Matrix a_now = adjacency(params);
    rec.is_dag_at_tau2 = is_acyclic(threshold(a_now, cfg.tau2));

    bool stop = false;
    if (epoch % cfg.check_period == 0) {
      if (constrained) {
        if (rec.is_dag_at_tau2) {
          frozen = true;
        } else if (frozen) {
          frozen = false;
          stopper.reset();
        }
      }
      if (!split.val.empty()) {
        rec.val_recon_loss = gaussian_nll(params, data, split.val);
        if (!std::isfinite(*rec.val_recon_loss)) {
          res.reason = StopReason::NonFinite;
          res.diagnostic = "stage " + std::to_string(st.stage) + " epoch " + std::to_string(epoch) +
                           ": non-finite validation nll";
          stop = true;
        } else if (!constrained || frozen) {
          if (stopper.observe(*rec.val_recon_loss, cfg.patience)) {
            res.reason = StopReason::EarlyStopped;
            stop = true;
          }
        }
      }
    }
    rec.frozen = constrained && frozen;
    res.log.push_back(rec);
    if (sink) sink(rec);
    res.epochs_run = epoch;
    if (stop) break;
    if (constrained && !frozen) gamma += cfg.gamma_inc;
  }
  res.params = std::move(params);
  return res;
}

}  // namespace detail

/// Unconstrained fit (gamma = 0) with only self-loops masked. Edges whose
/// induced weight ends below tau1 are returned as removed.
inline Stage1Result train_stage1(const Dataset& data, const TrainConfig& cfg, const LogSink& sink = {}) {
  data.validate();
  detail::validate_config(cfg);
  const std::size_t d = data.d();
  const DataSplit split = make_split(data.n(), cfg.val_fraction, derive_seed(cfg.seed, 100));
  ModelParams p = init_params(d, cfg.hidden, self_loop_mask(d), derive_seed(cfg.seed, 1));
  const detail::StageSettings st{1, {cfg.alpha1, cfg.beta1, 0.0}, cfg.eta1, cfg.epochs1, derive_seed(cfg.seed, 2)};
  Stage1Result out;
  static_cast<StageResult&>(out) = detail::run_stage(data, split, std::move(p), st, cfg, sink);
  const Matrix a = adjacency(out.params);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j && a(i, j) < cfg.tau1) out.removed.emplace_back(i, j);
  return out;
}

/// Penalized fit with the removed edges masked. gamma grows by gamma_inc per
/// epoch and is frozen while the graph thresholded at tau2 is acyclic
/// (checked every check_period epochs). Early stopping counts only while frozen.
inline StageResult train_stage2(const Dataset& data, const std::vector<Edge>& removed, const TrainConfig& cfg,
                                const LogSink& sink = {}, const ModelParams* warm_start = nullptr) {
  data.validate();
  detail::validate_config(cfg);
  const std::size_t d = data.d();
  const DataSplit split = make_split(data.n(), cfg.val_fraction, derive_seed(cfg.seed, 100));
  const InputMask mask = mask_without(d, removed);
  ModelParams p = init_params(d, cfg.hidden, mask, derive_seed(cfg.seed, 3));
  if (warm_start) {
    if (warm_start->d != d || warm_start->h != cfg.hidden) throw DimensionError("train_stage2: warm start shape");
    static_cast<ParamBlock&>(p) = *warm_start;
    detail::zero_masked_inputs(p, mask);
  }
  const detail::StageSettings st{2, {cfg.alpha2, cfg.beta2, 0.0}, cfg.eta2, cfg.epochs2, derive_seed(cfg.seed, 4)};
  return detail::run_stage(data, split, std::move(p), st, cfg, sink);
}

struct SdcdResult {
  DiGraph graph;
  Matrix adjacency;
  std::vector<Edge> removed;
  Stage1Result stage1;
  StageResult stage2;
  StopReason reason = StopReason::Completed;
  std::string diagnostic;
};

/// Stage 1, stage 2, then DAGTrim of the final adjacency at tau2.
inline SdcdResult run_sdcd(const Dataset& data, const TrainConfig& cfg, const LogSink& sink = {}) {
  SdcdResult out;
  out.stage1 = train_stage1(data, cfg, sink);
  out.removed = out.stage1.removed;
  if (out.stage1.reason == StopReason::NonFinite) {
    out.reason = StopReason::NonFinite;
    out.diagnostic = out.stage1.diagnostic;
    out.graph = DiGraph(data.d());
    return out;
  }
  out.stage2 = train_stage2(data, out.removed, cfg, sink, cfg.warm_start_stage2 ? &out.stage1.params : nullptr);
  out.reason = out.stage2.reason;
  out.diagnostic = out.stage2.diagnostic;
  if (out.reason == StopReason::NonFinite) {
    out.graph = DiGraph(data.d());
    return out;
  }
  out.adjacency = adjacency(out.stage2.params);
  out.graph = dag_trim(out.adjacency, cfg.tau2);
  return out;
}

}  // namespace sdcd

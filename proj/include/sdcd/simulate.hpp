#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "sdcd/dataset.hpp"
#include "sdcd/graph.hpp"

namespace sdcd {

/// splitmix64 finalizer; derives independent per-stream seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Erdos-Renyi skeleton with edge probability s / (d - 1) (expected s*d/2
/// edges), each edge oriented along a uniformly random node permutation.
inline DiGraph random_dag(std::size_t d, double s, std::uint64_t seed) {
  if (d >= 2 && (s < 0.0 || s > static_cast<double>(d - 1)))
    throw InvalidArgument("random_dag: s must lie in [0, d - 1]");
  DiGraph g(d);
  if (d < 2) return g;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> rank(d);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::shuffle(rank.begin(), rank.end(), rng);
  const double p = s / static_cast<double>(d - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      if (!(unif(rng) < p)) continue;
      if (rank[i] < rank[j])
        g.add_edge(i, j);
      else
        g.add_edge(j, i);
    }
  return g;
}

inline constexpr std::size_t kMechanismHidden = 100;

/// Mean function of one node: parents -> 100 tanh units -> scalar.
struct Mechanism {
  std::vector<std::size_t> parents;
  std::vector<double> w_hidden;  // kMechanismHidden x parents, row-major
  std::vector<double> b_hidden;  // kMechanismHidden
  std::vector<double> w_out;     // kMechanismHidden

  /// `x` is a full sample row; only parent entries are read.
  double mean(std::span<const double> x) const {
    if (parents.empty()) return 0.0;
    const std::size_t np = parents.size();
    double out = 0.0;
    for (std::size_t m = 0; m < kMechanismHidden; ++m) {
      double pre = b_hidden[m];
      for (std::size_t k = 0; k < np; ++k) pre += w_hidden[m * np + k] * x[parents[k]];
      out += w_out[m] * std::tanh(pre);
    }
    return out;
  }
};

struct Scm {
  DiGraph graph;
  std::vector<Mechanism> mechanisms;
  double noise_sigma = 0.5;
  double intervention_sigma = 0.1;
};

/// Per node: hidden weights N(0, 1/fan-in), hidden biases N(0, 1), output
/// weights N(0, 1/100). Root nodes have a constant zero mean.
inline Scm random_mechanisms(const DiGraph& g, std::uint64_t seed) {
  if (!is_acyclic(g)) throw InvalidArgument("random_mechanisms: graph must be acyclic");
  Scm scm;
  scm.graph = g;
  const std::size_t d = g.num_nodes();
  scm.mechanisms.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    Mechanism& mech = scm.mechanisms[j];
    mech.parents = g.parents(j);
    if (mech.parents.empty()) continue;
    std::mt19937_64 rng(derive_seed(seed, j));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t np = mech.parents.size();
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(np));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(kMechanismHidden));
    mech.w_hidden.resize(kMechanismHidden * np);
    mech.b_hidden.resize(kMechanismHidden);
    mech.w_out.resize(kMechanismHidden);
    for (auto& w : mech.w_hidden) w = normal(rng) * in_scale;
    for (auto& b : mech.b_hidden) b = normal(rng);
    for (auto& w : mech.w_out) w = normal(rng) * out_scale;
  }
  return scm;
}

/// Ancestral sampling. Regime 0 has n_obs observational rows; regime k >= 1
/// hard-intervenes on intervened[k - 1], replacing its mechanism with
/// N(0, intervention_sigma^2), for n_per_target rows. Each regime draws from
/// its own derived seed.
inline Dataset sample(const Scm& scm, std::size_t n_obs, std::size_t n_per_target,
                      const std::vector<std::size_t>& intervened, std::uint64_t seed) {
  const std::size_t d = scm.graph.num_nodes();
  for (std::size_t t : intervened)
    if (t >= d) throw InvalidArgument("sample: intervened node out of range");
  const auto order = topological_order(scm.graph);
  if (!order) throw InvalidArgument("sample: graph must be acyclic");

  Dataset data;
  data.x = Matrix(n_obs + intervened.size() * n_per_target, d);
  data.regime.assign(data.x.rows(), 0);
  data.interventions.assign(1, TargetSet{});
  for (std::size_t t : intervened) data.interventions.push_back(TargetSet{t});

  std::size_t row = 0;
  auto draw_regime = [&](std::size_t k, std::size_t count, std::ptrdiff_t target) {
    std::mt19937_64 rng(derive_seed(seed, k));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 0; r < count; ++r, ++row) {
      data.regime[row] = k;
      auto x = data.x.row(row);
      for (std::size_t j : *order) {
        if (static_cast<std::ptrdiff_t>(j) == target)
          x[j] = scm.intervention_sigma * normal(rng);
        else
          x[j] = scm.mechanisms[j].mean(x) + scm.noise_sigma * normal(rng);
      }
    }
  };
  draw_regime(0, n_obs, -1);
  for (std::size_t k = 0; k < intervened.size(); ++k)
    draw_regime(k + 1, n_per_target, static_cast<std::ptrdiff_t>(intervened[k]));
  return data;
}

/// Per-column zero mean and unit (population) variance over all rows pooled.
/// Constant columns are only centered and listed in constant_columns.
inline Dataset standardize(const Dataset& data) {
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  if (n < 2) throw InvalidArgument("standardize: need at least two rows");
  Dataset out = data;
  out.constant_columns.clear();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += data.x(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double c = data.x(r, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    const bool constant = !(sd > 0.0);
    if (constant) out.constant_columns.push_back(j);
    for (std::size_t r = 0; r < n; ++r) {
      const double c = data.x(r, j) - mean;
      out.x(r, j) = constant ? c : c / sd;
    }
  }
  out.standardized = true;
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end protocol shared by the CLI and the acceptance suite
// ---------------------------------------------------------------------------

struct SimulationSpec {
  std::size_t d = 10;
  double s = 4.0;
  std::size_t n_obs = 10000;
  std::size_t n_per_target = 500;
  double frac_intervened = 0.0;
  std::uint64_t seed = 0;
  bool standardize = true;
};

struct Simulation {
  DiGraph truth;
  Dataset data;
  std::vector<std::size_t> intervened;  // ascending
};

/// First ceil(frac * d) entries of a seeded shuffle of 0..d-1, sorted.
inline std::vector<std::size_t> intervened_prefix(std::size_t d, double frac, std::uint64_t seed) {
  if (!(frac >= 0.0 && frac <= 1.0)) throw InvalidArgument("intervened_prefix: fraction must lie in [0, 1]");
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  // The slack keeps 0.3 * 10 = 3.0000000000000004 from rounding up to 4.
  const auto k = std::min(d, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(d) - 1e-9)));
  std::vector<std::size_t> out(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

/// Streams: 0 graph, 1 mechanisms, 2 intervened set, 3 samples.
inline Simulation simulate(const SimulationSpec& spec) {
  Simulation sim;
  sim.truth = random_dag(spec.d, spec.s, derive_seed(spec.seed, 0));
  const auto scm = random_mechanisms(sim.truth, derive_seed(spec.seed, 1));
  sim.intervened = intervened_prefix(spec.d, spec.frac_intervened, derive_seed(spec.seed, 2));
  sim.data = sample(scm, spec.n_obs, spec.n_per_target, sim.intervened, derive_seed(spec.seed, 3));
  if (spec.standardize) sim.data = standardize(sim.data);
  return sim;
}

}  // namespace sdcd

#pragma once

#include <cstddef>
#include <ostream>
#include <string>

#include "sdcd/graph.hpp"

namespace sdcd {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  std::size_t shd = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t shd_cpdag = 0;
  std::size_t n_pred_edges = 0;
  std::size_t n_true_edges = 0;
};

namespace detail {

inline void require_same_size(const DiGraph& a, const DiGraph& b, const char* who) {
  if (a.num_nodes() != b.num_nodes()) throw DimensionError(std::string(who) + ": graphs have different node counts");
}

// 0 none, 1 i->j, 2 j->i, 3 both directions (only possible in cyclic graphs).
inline int pair_state(const DiGraph& g, std::size_t i, std::size_t j) {
  return (g.has_edge(i, j) ? 1 : 0) | (g.has_edge(j, i) ? 2 : 0);
}

// 0 none, 1 i->j, 2 j->i, 4 undirected.
inline int pair_state(const Pdag& p, std::size_t i, std::size_t j) {
  if (p.has_undirected(i, j)) return 4;
  return (p.has_directed(i, j) ? 1 : 0) | (p.has_directed(j, i) ? 2 : 0);
}

}  // namespace detail

/// Structural Hamming distance: one unit per unordered pair whose edge state
/// differs (addition, deletion, or reversal each count once).
inline std::size_t shd(const DiGraph& pred, const DiGraph& truth) {
  detail::require_same_size(pred, truth, "shd");
  std::size_t dist = 0;
  const std::size_t d = pred.num_nodes();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (detail::pair_state(pred, i, j) != detail::pair_state(truth, i, j)) ++dist;
  return dist;
}

/// Directed-edge set semantics. An empty prediction scores precision 0 unless
/// the truth is empty as well; an empty truth gives recall 1.
inline PrecisionRecall precision_recall_f1(const DiGraph& pred, const DiGraph& truth) {
  detail::require_same_size(pred, truth, "precision_recall_f1");
  std::size_t hit = 0;
  for (auto [i, j] : pred.edges())
    if (truth.has_edge(i, j)) ++hit;
  const std::size_t np = pred.num_edges();
  const std::size_t nt = truth.num_edges();
  PrecisionRecall r;
  r.precision = np == 0 ? (nt == 0 ? 1.0 : 0.0) : static_cast<double>(hit) / static_cast<double>(np);
  r.recall = nt == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(nt);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

inline std::size_t shd(const Pdag& a, const Pdag& b) {
  if (a.num_nodes() != b.num_nodes()) throw DimensionError("shd: graphs have different node counts");
  std::size_t dist = 0;
  for (std::size_t i = 0; i < a.num_nodes(); ++i)
    for (std::size_t j = i + 1; j < a.num_nodes(); ++j)
      if (detail::pair_state(a, i, j) != detail::pair_state(b, i, j)) ++dist;
  return dist;
}

/// SHD between the CPDAGs of two acyclic graphs; zero within an equivalence class.
inline std::size_t shd_cpdag(const DiGraph& pred, const DiGraph& truth) {
  detail::require_same_size(pred, truth, "shd_cpdag");
  return shd(cpdag(pred), cpdag(truth));
}

/// All metrics at once. shd_cpdag is only defined for acyclic inputs; the
/// returned flag reports whether it was computed.
inline MetricReport evaluate(const DiGraph& pred, const DiGraph& truth, bool* cpdag_defined = nullptr) {
  MetricReport m;
  m.shd = shd(pred, truth);
  const auto pr = precision_recall_f1(pred, truth);
  m.precision = pr.precision;
  m.recall = pr.recall;
  m.f1 = pr.f1;
  const bool ok = is_acyclic(pred) && is_acyclic(truth);
  if (ok) m.shd_cpdag = shd_cpdag(pred, truth);
  if (cpdag_defined) *cpdag_defined = ok;
  m.n_pred_edges = pred.num_edges();
  m.n_true_edges = truth.num_edges();
  return m;
}

}  // namespace sdcd

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sdcd/matrix.hpp"

namespace sdcd {

using Edge = std::pair<std::size_t, std::size_t>;

/// Binary directed graph over nodes 0..d-1 without self-loops.
class DiGraph {
 public:
  DiGraph() = default;
  explicit DiGraph(std::size_t d) : d_(d), adj_(d * d, 0) {}
  DiGraph(std::size_t d, const std::vector<Edge>& edges) : DiGraph(d) {
    for (auto [i, j] : edges) add_edge(i, j);
  }

  std::size_t num_nodes() const noexcept { return d_; }

  void add_edge(std::size_t i, std::size_t j) {
    check(i, j);
    adj_[i * d_ + j] = 1;
  }
  void remove_edge(std::size_t i, std::size_t j) {
    check(i, j);
    adj_[i * d_ + j] = 0;
  }
  bool has_edge(std::size_t i, std::size_t j) const noexcept {
    return i < d_ && j < d_ && adj_[i * d_ + j] != 0;
  }
  bool adjacent(std::size_t i, std::size_t j) const noexcept { return has_edge(i, j) || has_edge(j, i); }

  std::size_t num_edges() const noexcept {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
  }

  /// Edges in lexicographic (i, j) order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j)
        if (adj_[i * d_ + j]) out.emplace_back(i, j);
    return out;
  }

  std::vector<std::size_t> parents(std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d_; ++i)
      if (has_edge(i, j)) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> children(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < d_; ++j)
      if (has_edge(i, j)) out.push_back(j);
    return out;
  }

  Matrix to_matrix() const {
    Matrix m(d_, d_);
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j) m(i, j) = adj_[i * d_ + j];
    return m;
  }

  bool operator==(const DiGraph&) const = default;

 private:
  void check(std::size_t i, std::size_t j) const {
    if (i >= d_ || j >= d_) throw InvalidArgument("DiGraph: edge index out of range");
    if (i == j) throw InvalidArgument("DiGraph: self-loops are not allowed");
  }

  std::size_t d_ = 0;
  std::vector<std::uint8_t> adj_;
};

/// Partially directed graph: every adjacent pair is either directed or undirected.
class Pdag {
 public:
  Pdag() = default;
  explicit Pdag(std::size_t d) : d_(d), directed_(d * d, 0), undirected_(d * d, 0) {}

  std::size_t num_nodes() const noexcept { return d_; }

  bool has_directed(std::size_t i, std::size_t j) const noexcept { return directed_[i * d_ + j] != 0; }
  bool has_undirected(std::size_t i, std::size_t j) const noexcept { return undirected_[i * d_ + j] != 0; }
  bool adjacent(std::size_t i, std::size_t j) const noexcept {
    return has_directed(i, j) || has_directed(j, i) || has_undirected(i, j);
  }

  void set_undirected(std::size_t i, std::size_t j) {
    directed_[i * d_ + j] = directed_[j * d_ + i] = 0;
    undirected_[i * d_ + j] = undirected_[j * d_ + i] = 1;
  }
  void orient(std::size_t i, std::size_t j) {
    undirected_[i * d_ + j] = undirected_[j * d_ + i] = 0;
    directed_[j * d_ + i] = 0;
    directed_[i * d_ + j] = 1;
  }

  std::vector<Edge> directed_edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j)
        if (has_directed(i, j)) out.emplace_back(i, j);
    return out;
  }
  /// Undirected edges as (i, j) with i < j.
  std::vector<Edge> undirected_edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = i + 1; j < d_; ++j)
        if (has_undirected(i, j)) out.emplace_back(i, j);
    return out;
  }

  bool operator==(const Pdag&) const = default;

 private:
  std::size_t d_ = 0;
  std::vector<std::uint8_t> directed_;
  std::vector<std::uint8_t> undirected_;
};

/// Kahn's algorithm; nodes are released in increasing index order.
inline std::optional<std::vector<std::size_t>> topological_order(const DiGraph& g) {
  const std::size_t d = g.num_nodes();
  std::vector<std::size_t> indeg(d, 0);
  for (auto [i, j] : g.edges()) ++indeg[j];
  std::deque<std::size_t> ready;
  for (std::size_t v = 0; v < d; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::vector<std::size_t> order;
  order.reserve(d);
  while (!ready.empty()) {
    const std::size_t v = ready.front();
    ready.pop_front();
    order.push_back(v);
    for (std::size_t w = 0; w < d; ++w) {
      if (g.has_edge(v, w) && --indeg[w] == 0) ready.push_back(w);
    }
  }
  if (order.size() != d) return std::nullopt;
  return order;
}

inline bool is_acyclic(const DiGraph& g) { return topological_order(g).has_value(); }

/// Edge (i, j) kept iff a(i, j) >= tau and i != j.
inline DiGraph threshold(const Matrix& a, double tau) {
  require_square(a, "threshold");
  DiGraph g(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) >= tau) g.add_edge(i, j);
  return g;
}

namespace detail {

inline bool reaches(const DiGraph& g, std::size_t from, std::size_t to) {
  if (from == to) return true;
  std::vector<std::uint8_t> seen(g.num_nodes(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w = 0; w < g.num_nodes(); ++w) {
      if (!g.has_edge(v, w) || seen[w]) continue;
      if (w == to) return true;
      seen[w] = 1;
      stack.push_back(w);
    }
  }
  return false;
}

}  // namespace detail

/// Greedy heaviest-first edge selection. Candidates are the entries strictly
/// above tau, sorted by decreasing weight with ties broken by (i, j); an edge
/// is added only if the graph built so far stays acyclic.
inline DiGraph dag_trim(const Matrix& a, double tau) {
  require_square(a, "dag_trim");
  const std::size_t d = a.rows();
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j && a(i, j) > tau) cand.emplace_back(a(i, j), i, j);
  std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::make_pair(std::get<1>(x), std::get<2>(x)) < std::make_pair(std::get<1>(y), std::get<2>(y));
  });
  DiGraph g(d);
  for (const auto& [w, i, j] : cand) {
    // i -> j closes a cycle iff j already reaches i.
    if (!detail::reaches(g, j, i)) g.add_edge(i, j);
  }
  return g;
}

/// Parents, children and the children's other parents of j, sorted.
inline std::vector<std::size_t> markov_boundary(const DiGraph& g, std::size_t j) {
  const std::size_t d = g.num_nodes();
  if (j >= d) throw InvalidArgument("markov_boundary: node out of range");
  std::vector<std::uint8_t> in(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    if (g.has_edge(i, j)) in[i] = 1;
    if (g.has_edge(j, i)) {
      in[i] = 1;
      for (std::size_t k = 0; k < d; ++k)
        if (g.has_edge(k, i)) in[k] = 1;
    }
  }
  in[j] = 0;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d; ++i)
    if (in[i]) out.push_back(i);
  return out;
}

namespace detail {

// Meek orientation rules; returns true if any edge was oriented.
inline bool apply_meek_rules(Pdag& p) {
  const std::size_t d = p.num_nodes();
  bool changed = false;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      if (a == b || !p.has_undirected(a, b)) continue;
      bool orient = false;
      // R1: c -> a, a - b, c and b not adjacent.
      for (std::size_t c = 0; c < d && !orient; ++c)
        if (c != b && p.has_directed(c, a) && !p.adjacent(c, b)) orient = true;
      // R2: a -> c -> b and a - b.
      for (std::size_t c = 0; c < d && !orient; ++c)
        if (p.has_directed(a, c) && p.has_directed(c, b)) orient = true;
      // R3: a - c1 -> b, a - c2 -> b, c1 and c2 not adjacent.
      for (std::size_t c1 = 0; c1 < d && !orient; ++c1) {
        if (!p.has_undirected(a, c1) || !p.has_directed(c1, b)) continue;
        for (std::size_t c2 = c1 + 1; c2 < d && !orient; ++c2)
          if (p.has_undirected(a, c2) && p.has_directed(c2, b) && !p.adjacent(c1, c2)) orient = true;
      }
      // R4: a - c, c -> e -> b, a adjacent to e, c and b not adjacent.
      for (std::size_t c = 0; c < d && !orient; ++c) {
        if (c == b || !p.has_undirected(a, c) || p.adjacent(c, b)) continue;
        for (std::size_t e = 0; e < d && !orient; ++e)
          if (e != a && p.has_directed(c, e) && p.has_directed(e, b) && p.adjacent(a, e)) orient = true;
      }
      if (orient) {
        p.orient(a, b);
        changed = true;
      }
    }
  }
  return changed;
}

}  // namespace detail

/// Completed PDAG of the Markov equivalence class of an acyclic graph:
/// skeleton, v-structures oriented, then Meek rules R1-R4 to closure.
inline Pdag cpdag(const DiGraph& g) {
  if (!is_acyclic(g)) throw InvalidArgument("cpdag: input graph has a cycle");
  const std::size_t d = g.num_nodes();
  Pdag p(d);
  for (auto [i, j] : g.edges()) p.set_undirected(i, j);
  for (std::size_t k = 0; k < d; ++k) {
    const auto pa = g.parents(k);
    for (std::size_t x = 0; x < pa.size(); ++x)
      for (std::size_t y = x + 1; y < pa.size(); ++y)
        if (!g.adjacent(pa[x], pa[y])) {
          p.orient(pa[x], k);
          p.orient(pa[y], k);
        }
  }
  while (detail::apply_meek_rules(p)) {
  }
  return p;
}

// ---------------------------------------------------------------------------
// Graph files
// ---------------------------------------------------------------------------
//
// Edge list:   optional "# d=<n>" line, then a "src,dst" header, one edge per line.
// Dense form:  d rows of d comma-separated 0/1 entries, no header.

inline void write_edge_list(std::ostream& os, const DiGraph& g) {
  os << "# d=" << g.num_nodes() << "\n";
  os << "src,dst\n";
  for (auto [i, j] : g.edges()) os << i << ',' << j << '\n';
}

inline DiGraph read_graph(std::istream& is, std::optional<std::size_t> expected_d = std::nullopt) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  std::optional<std::size_t> d = expected_d;
  std::size_t pos = 0;
  if (pos < lines.size() && lines[pos].rfind("# d=", 0) == 0) {
    const auto declared = static_cast<std::size_t>(parse_double(lines[pos].substr(4)));
    if (d && *d != declared) throw ValidationError("graph file: node count differs from expected");
    d = declared;
    ++pos;
  }
  auto to_index = [](const std::string& s) {
    const double v = parse_double(s);
    if (v < 0 || v != std::floor(v)) throw ValidationError("graph file: bad node index '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  if (pos < lines.size() && lines[pos] == "src,dst") {
    ++pos;
    std::vector<Edge> edges;
    std::size_t max_index = 0;
    for (; pos < lines.size(); ++pos) {
      const auto cells = split_csv_line(lines[pos]);
      if (cells.size() != 2) throw ValidationError("edge list: expected two columns");
      edges.emplace_back(to_index(cells[0]), to_index(cells[1]));
      max_index = std::max({max_index, edges.back().first + 1, edges.back().second + 1});
    }
    const std::size_t n = d.value_or(max_index);
    if (max_index > n) throw ValidationError("edge list: node index exceeds node count");
    DiGraph g(n);
    for (auto [i, j] : edges) {
      if (i == j) throw ValidationError("edge list: self-loop");
      g.add_edge(i, j);
    }
    return g;
  }
  // Dense 0/1 matrix.
  std::stringstream rest;
  for (; pos < lines.size(); ++pos) rest << lines[pos] << '\n';
  const Matrix m = read_matrix_csv(rest);
  if (!m.is_square()) throw ValidationError("dense graph: matrix must be square");
  if (d && *d != m.rows()) throw ValidationError("dense graph: node count differs from expected");
  DiGraph g(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0 && m(i, j) != 1.0) throw ValidationError("dense graph: entries must be 0 or 1");
      if (m(i, j) == 1.0) {
        if (i == j) throw ValidationError("dense graph: self-loop");
        g.add_edge(i, j);
      }
    }
  return g;
}

inline void save_edge_list(const std::string& path, const DiGraph& g) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_edge_list(os, g);
}

inline DiGraph load_graph(const std::string& path, std::optional<std::size_t> expected_d = std::nullopt) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_graph(is, expected_d);
}

}  // namespace sdcd

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "sdcd/errors.hpp"
#include "sdcd/matrix.hpp"

namespace sdcd {

using TargetSet = std::vector<std::size_t>;

/// n x d samples with a regime label per row. interventions[k] is the target
/// set of regime k; regime 0 is observational and has no targets.
struct Dataset {
  Matrix x;
  std::vector<std::size_t> regime;
  std::vector<TargetSet> interventions{TargetSet{}};
  bool standardized = false;
  std::vector<std::size_t> constant_columns;

  std::size_t n() const noexcept { return x.rows(); }
  std::size_t d() const noexcept { return x.cols(); }

  void validate() const {
    if (regime.size() != x.rows()) throw ValidationError("dataset: one regime label per row required");
    if (interventions.empty() || !interventions.front().empty())
      throw ValidationError("dataset: regime 0 must be observational (empty target set)");
    for (std::size_t r : regime)
      if (r >= interventions.size()) throw ValidationError("dataset: regime label references an undefined regime");
    for (const auto& t : interventions)
      for (std::size_t j : t)
        if (j >= x.cols()) throw ValidationError("dataset: intervention target out of range");
  }

  /// keep[k * d + j] == 1 when variable j contributes to the likelihood in regime k.
  std::vector<unsigned char> likelihood_mask() const {
    const std::size_t dd = d();
    std::vector<unsigned char> keep(interventions.size() * dd, 1);
    for (std::size_t k = 0; k < interventions.size(); ++k)
      for (std::size_t j : interventions[k]) keep[k * dd + j] = 0;
    return keep;
  }

  std::vector<std::size_t> observational_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < regime.size(); ++i)
      if (regime[i] == 0) rows.push_back(i);
    return rows;
  }
};

}  // namespace sdcd

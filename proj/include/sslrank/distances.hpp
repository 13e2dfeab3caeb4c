#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sslrank/dataset.hpp"

namespace sslrank {

/// Per-feature distance between two examples: indicator for nominal
/// features, range-normalized absolute difference for numeric ones.
/// A zero-range numeric feature contributes 0.
inline double feature_distance(const Column& c, std::size_t a, std::size_t b) {
  if (c.kind == FeatureKind::Nominal) return c.codes[a] != c.codes[b] ? 1.0 : 0.0;
  const double range = c.range();
  if (range <= 0.0) return 0.0;
  return std::abs(c.numeric[a] - c.numeric[b]) / range;
}

/// Mean per-feature distance; maps into [0, 1]. Ranges come from the
/// dataset the columns belong to.
inline double descriptive_distance(const Dataset& d, std::size_t a, std::size_t b) {
  if (d.features.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : d.features) sum += feature_distance(c, a, b);
  return sum / static_cast<double>(d.features.size());
}

/// Target-space distance between two labeled examples, in [0, 1].
/// Classification: 0/1 indicator. STR/MTR: range-normalized absolute
/// differences (ranges over the labeled examples), averaged over targets.
/// MLC: Hamming distance scaled by 1/|L|. HMLC: hierarchy-weighted Hamming
/// distance scaled by 1/sum(alpha_i).
inline double target_distance(const Dataset& d, std::size_t a, std::size_t b) {
  if (!d.is_labeled(a) || !d.is_labeled(b))
    throw std::invalid_argument("target_distance: both examples must be labeled");
  const auto& t = d.targets;
  switch (t.task) {
    case Task::Classification:
      return t.columns[0].codes[a] != t.columns[0].codes[b] ? 1.0 : 0.0;
    case Task::Str:
    case Task::Mtr: {
      double sum = 0.0;
      for (const auto& c : t.columns) {
        const double range = c.range();
        if (range > 0.0) sum += std::abs(c.numeric[a] - c.numeric[b]) / range;
      }
      return sum / static_cast<double>(t.columns.size());
    }
    case Task::Mlc: {
      double diff = 0.0;
      for (const auto& c : t.columns)
        if (c.numeric[a] != c.numeric[b]) diff += 1.0;
      return diff / static_cast<double>(t.columns.size());
    }
    case Task::Hmlc: {
      const auto& w = t.hierarchy->weights;
      double diff = 0.0, total = 0.0;
      for (std::size_t j = 0; j < t.columns.size(); ++j) {
        total += w[j];
        if (t.columns[j].numeric[a] != t.columns[j].numeric[b]) diff += w[j];
      }
      return total > 0.0 ? diff / total : 0.0;
    }
  }
  return 0.0;
}

}  // namespace sslrank

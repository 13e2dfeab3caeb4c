#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sslrank/dataset.hpp"
#include "sslrank/ranking.hpp"

namespace sslrank {

/// Semi-supervised Laplacian score over a kNN similarity graph with heat
/// kernel weights. The kernel bandwidth defaults to the median pairwise
/// distance and edges between two labeled examples are emphasized; these are
/// implementation defaults following the Doquire-Verleysen construction, not
/// constants taken from it.
struct LaplaceParams {
  std::size_t neighbors = 10;
  double bandwidth = 0.0;  // 0 = median pairwise distance rule
  double labeled_emphasis = 2.0;
};

struct LaplaceScores {
  FeatureRanking ranking;          // final importances S + s - s_i
  std::vector<double> raw;         // per original feature; NaN for constants
  std::vector<int> constant_features;
};

/// STR-only baseline. Features are one-hot encoded, constant encoded columns
/// are dropped, per-column Laplacian scores are computed on the graph, a
/// nominal feature scores the sum of its block, and the final importance is
/// S + s - s_i so that small raw scores (better) become large importances.
/// Constant features are ranked strictly below every scored feature.
inline LaplaceScores laplace_score_detailed(const Dataset& d,
                                            const LaplaceParams& p) {
  if (d.targets.task != Task::Str)
    throw std::invalid_argument("laplace_score: STR task only");
  if (p.neighbors < 1)
    throw std::invalid_argument("laplace_score: neighbor count must be >= 1");
  const std::size_t n = d.size();
  if (n < p.neighbors + 1)
    throw std::invalid_argument("laplace_score: need at least neighbors+1 examples");
  if (p.labeled_emphasis <= 1.0)
    throw std::invalid_argument("laplace_score: emphasis factor must be > 1");

  const auto enc = one_hot_encode(d);
  const std::size_t cols = enc.cols;

  std::vector<bool> col_constant(cols, true);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 1; r < n; ++r)
      if (enc.at(r, c) != enc.at(0, c)) {
        col_constant[c] = false;
        break;
      }

  // Pairwise squared Euclidean distances on the encoded matrix.
  std::vector<double> dist2(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double dv = enc.at(a, c) - enc.at(b, c);
        acc += dv * dv;
      }
      dist2[a * n + b] = acc;
      dist2[b * n + a] = acc;
    }

  double sigma = p.bandwidth;
  if (sigma <= 0.0) {
    std::vector<double> pair_dist;
    pair_dist.reserve(n * (n - 1) / 2);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        pair_dist.push_back(std::sqrt(dist2[a * n + b]));
    const std::size_t mid = pair_dist.size() / 2;
    std::nth_element(pair_dist.begin(), pair_dist.begin() + mid, pair_dist.end());
    sigma = pair_dist[mid];
  }
  const double denom = sigma > 0.0 ? 2.0 * sigma * sigma : 1.0;

  // Symmetric kNN adjacency: i ~ j when either is among the other's k
  // nearest (ties toward the lower index).
  std::vector<double> adj(n * n, 0.0);
  {
    std::vector<std::pair<double, int>> cand(n - 1);
    for (std::size_t a = 0; a < n; ++a) {
      std::size_t w = 0;
      for (std::size_t b = 0; b < n; ++b)
        if (b != a) cand[w++] = {dist2[a * n + b], static_cast<int>(b)};
      std::partial_sort(cand.begin(), cand.begin() + p.neighbors, cand.end());
      for (std::size_t i = 0; i < p.neighbors; ++i) {
        const std::size_t b = static_cast<std::size_t>(cand[i].second);
        double wgt = std::exp(-dist2[a * n + b] / denom);
        if (d.is_labeled(a) && d.is_labeled(b)) wgt *= p.labeled_emphasis;
        adj[a * n + b] = wgt;
        adj[b * n + a] = wgt;
      }
    }
  }

  std::vector<double> degree(n, 0.0);
  double degree_total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < n; ++b) acc += adj[a * n + b];
    degree[a] = acc;
    degree_total += acc;
  }

  // Laplacian score of one encoded column f:
  //   ft = f - (f' D 1 / 1' D 1) 1,  s = (ft' L ft) / (ft' D ft),  L = D - S.
  auto column_score = [&](std::size_t c) {
    double weighted_mean = 0.0;
    for (std::size_t a = 0; a < n; ++a) weighted_mean += enc.at(a, c) * degree[a];
    weighted_mean /= degree_total;
    std::vector<double> ft(n);
    for (std::size_t a = 0; a < n; ++a) ft[a] = enc.at(a, c) - weighted_mean;
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      den += ft[a] * ft[a] * degree[a];
      double lap = degree[a] * ft[a];
      for (std::size_t b = 0; b < n; ++b) lap -= adj[a * n + b] * ft[b];
      num += ft[a] * lap;
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  };

  LaplaceScores out;
  out.raw.assign(d.feature_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f = 0; f < d.feature_count(); ++f) {
    const auto [start, width] = enc.blocks[f];
    double sum = 0.0;
    bool scored = false;
    for (int c = start; c < start + width; ++c) {
      if (col_constant[c]) continue;
      const double s = column_score(c);
      if (std::isnan(s)) continue;
      sum += s;
      scored = true;
    }
    if (scored)
      out.raw[f] = sum;
    else
      out.constant_features.push_back(static_cast<int>(f));
  }

  double hi = -std::numeric_limits<double>::infinity(), lo = -hi;
  for (double v : out.raw)
    if (!std::isnan(v)) {
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
  if (out.constant_features.size() == d.feature_count())
    throw std::invalid_argument("laplace_score: every feature is constant");

  out.ranking.method = "laplace";
  out.ranking.scores.assign(d.feature_count(), 0.0);
  for (std::size_t f = 0; f < d.feature_count(); ++f) {
    if (std::isnan(out.raw[f]))
      out.ranking.scores[f] = lo - 1.0;  // strictly below every scored feature
    else
      out.ranking.scores[f] = hi + lo - out.raw[f];
  }
  return out;
}

inline FeatureRanking laplace_score(const Dataset& d, const LaplaceParams& p) {
  return laplace_score_detailed(d, p).ranking;
}

}  // namespace sslrank

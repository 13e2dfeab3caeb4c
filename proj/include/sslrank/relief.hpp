#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "sslrank/dataset.hpp"
#include "sslrank/distances.hpp"
#include "sslrank/ranking.hpp"
#include "sslrank/rng.hpp"

namespace sslrank {

struct ReliefParams {
  std::size_t m = 0;  // iterations; 0 means one per example
  std::size_t k = 15;
  double w0 = 1.0, w1 = 1.0;  // influence interval, w0 <= w1
  std::uint64_t seed = 0;
};

namespace detail {

/// Dense symmetric matrix of pairwise descriptive distances.
struct DistanceCache {
  std::size_t n = 0;
  std::vector<double> values;

  explicit DistanceCache(const Dataset& d) : n(d.size()) {
    values.assign(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double v = descriptive_distance(d, a, b);
        values[a * n + b] = v;
        values[b * n + a] = v;
      }
  }
  double at(std::size_t a, std::size_t b) const { return values[a * n + b]; }
};

inline std::vector<double> influence_from_distances(
    const Dataset& d, double w0, double w1,
    const std::vector<double>& nearest_labeled) {
  const std::size_t n = d.size();
  std::vector<double> w(n, 1.0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    if (d.is_labeled(i)) continue;
    lo = std::min(lo, nearest_labeled[i]);
    hi = std::max(hi, nearest_labeled[i]);
  }
  if (lo > hi) return w;  // fully labeled
  for (std::size_t i = 0; i < n; ++i) {
    if (d.is_labeled(i)) continue;
    if (hi == lo) {
      w[i] = 0.5 * (w0 + w1);
    } else {
      // Linear through (lo, w1) and (hi, w0): the nearest unlabeled example
      // gets the strongest influence.
      w[i] = w1 + (nearest_labeled[i] - lo) * (w0 - w1) / (hi - lo);
    }
  }
  return w;
}

}  // namespace detail

/// Per-example influence weights: 1 for labeled examples; for unlabeled ones
/// a linear function of the descriptive distance to the nearest labeled
/// example, mapping the closest unlabeled example to w1 and the farthest to
/// w0. When all unlabeled examples share one distance they all get
/// (w0+w1)/2.
inline std::vector<double> instance_influence(const Dataset& d, double w0,
                                              double w1) {
  if (w0 < 0.0 || w1 > 1.0 || w0 > w1)
    throw std::invalid_argument("instance_influence: need 0 <= w0 <= w1 <= 1");
  const auto labeled = d.labeled_indices();
  if (labeled.empty())
    throw std::invalid_argument("instance_influence: no labeled examples");
  std::vector<double> nearest(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.is_labeled(i)) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int l : labeled) best = std::min(best, descriptive_distance(d, i, l));
    nearest[i] = best;
  }
  return detail::influence_from_distances(d, w0, w1, nearest);
}

/// The k nearest neighbors of example r by descriptive distance, excluding r
/// itself; ties break toward the lower example index.
inline std::vector<int> descriptive_knn(const Dataset& d, std::size_t r,
                                        std::size_t k) {
  std::vector<std::pair<double, int>> cand;
  cand.reserve(d.size() - 1);
  for (std::size_t j = 0; j < d.size(); ++j)
    if (j != r)
      cand.emplace_back(descriptive_distance(d, r, j), static_cast<int>(j));
  const std::size_t take = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
  std::vector<int> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = cand[i].second;
  return out;
}

/// SSL-Relief. m seeded picks; for each pick, its k nearest neighbors by
/// descriptive distance contribute with weight w[r] * w[n], using the target
/// distance when both ends are labeled and the descriptive distance
/// otherwise. The final importances are
///   imp[i] = P_dA,dC[i] / P_dC - (P_dA[i] - P_dA,dC[i]) / (s - P_dC).
/// Degenerate denominators (P_dC = 0 or s = P_dC) yield an all-zero ranking
/// with the degenerate flag set.
inline FeatureRanking ssl_relief(const Dataset& d, const ReliefParams& p) {
  const std::size_t n = d.size();
  const std::size_t n_features = d.feature_count();
  if (p.k < 1) throw std::invalid_argument("ssl_relief: k must be >= 1");
  if (n < p.k + 1)
    throw std::invalid_argument("ssl_relief: need at least k+1 examples");
  if (p.w0 < 0.0 || p.w1 > 1.0 || p.w0 > p.w1)
    throw std::invalid_argument("ssl_relief: need 0 <= w0 <= w1 <= 1");
  if (d.labeled_count() == 0)
    throw std::invalid_argument("ssl_relief: no labeled examples");
  const std::size_t iterations = p.m ? p.m : n;

  const detail::DistanceCache dist(d);

  std::vector<double> nearest_labeled(n, 0.0);
  {
    const auto labeled = d.labeled_indices();
    for (std::size_t i = 0; i < n; ++i) {
      if (d.is_labeled(i)) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int l : labeled) best = std::min(best, dist.at(i, l));
      nearest_labeled[i] = best;
    }
  }
  const auto influence =
      detail::influence_from_distances(d, p.w0, p.w1, nearest_labeled);

  // Neighbor lists are label-independent; computed lazily per picked example.
  std::vector<std::vector<int>> knn(n);
  auto neighbors = [&](std::size_t r) -> const std::vector<int>& {
    auto& cached = knn[r];
    if (!cached.empty()) return cached;
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != r) cand.emplace_back(dist.at(r, j), static_cast<int>(j));
    std::partial_sort(cand.begin(), cand.begin() + p.k, cand.end());
    cached.resize(p.k);
    for (std::size_t i = 0; i < p.k; ++i) cached[i] = cand[i].second;
    return cached;
  };

  std::vector<double> p_diff_attr(n_features, 0.0);
  std::vector<double> p_diff_both(n_features, 0.0);
  double p_diff_cluster = 0.0;
  double weight_sum = 0.0;

  auto rng = make_rng(p.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t it = 0; it < iterations; ++it) {
    const std::size_t r = pick(rng);
    for (int nb : neighbors(r)) {
      const double w = influence[r] * influence[nb];
      weight_sum += w;
      const bool both_labeled = d.is_labeled(r) && d.is_labeled(nb);
      const double d_cluster =
          both_labeled ? target_distance(d, r, nb) : dist.at(r, nb);
      p_diff_cluster += w * d_cluster;
      for (std::size_t i = 0; i < n_features; ++i) {
        const double di = feature_distance(d.features[i], r, nb);
        p_diff_attr[i] += w * di;
        p_diff_both[i] += w * di * d_cluster;
      }
    }
  }

  FeatureRanking out;
  out.method = "relief";
  out.scores.assign(n_features, 0.0);
  const double miss_denom = p_diff_cluster;
  const double hit_denom = weight_sum - p_diff_cluster;
  if (miss_denom <= 0.0 || hit_denom <= 0.0) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < n_features; ++i)
    out.scores[i] = p_diff_both[i] / miss_denom -
                    (p_diff_attr[i] - p_diff_both[i]) / hit_denom;
  return out;
}

}  // namespace sslrank

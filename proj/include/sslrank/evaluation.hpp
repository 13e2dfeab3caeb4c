#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "sslrank/dataset.hpp"
#include "sslrank/distances.hpp"
#include "sslrank/metrics.hpp"
#include "sslrank/pct.hpp"
#include "sslrank/rng.hpp"

namespace sslrank {

/// Label-masked cross-validation plan. Folds partition the examples; for a
/// test fold i and labeled budget L, each of the x-1 contributing folds
/// keeps floor(L/(x-1)) labeled examples, the first L mod (x-1) of them one
/// more, so the training set holds exactly L labeled examples. Within a fold
/// the kept examples are prefixes of one seeded order, which nests the
/// labeled sets across L.
struct FoldPlan {
  std::size_t x = 0;
  std::vector<std::size_t> l_grid;
  std::vector<std::vector<int>> folds;
  std::vector<std::vector<std::vector<int>>> train_labeled;  // [fold][l_index]

  std::vector<int> train_rows(std::size_t fold) const {
    std::vector<int> rows;
    for (std::size_t j = 0; j < folds.size(); ++j)
      if (j != fold) rows.insert(rows.end(), folds[j].begin(), folds[j].end());
    return rows;
  }
};

inline FoldPlan make_folds(const Dataset& d, std::size_t x,
                           std::vector<std::size_t> l_grid, std::uint64_t seed) {
  if (x < 2) throw std::invalid_argument("make_folds: need x >= 2");
  if (d.labeled_count() != d.size())
    throw std::invalid_argument("make_folds: dataset must be fully labeled");
  FoldPlan plan;
  plan.x = x;
  plan.l_grid = std::move(l_grid);

  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  plan.folds.resize(x);
  const std::size_t base = d.size() / x, extra = d.size() % x;
  std::size_t at = 0;
  for (std::size_t j = 0; j < x; ++j) {
    const std::size_t len = base + (j < extra ? 1 : 0);
    plan.folds[j].assign(order.begin() + at, order.begin() + at + len);
    at += len;
  }

  plan.train_labeled.assign(x, {});
  for (std::size_t i = 0; i < x; ++i) {
    for (std::size_t li = 0; li < plan.l_grid.size(); ++li) {
      const std::size_t l = plan.l_grid[li];
      const std::size_t quota_base = l / (x - 1), remainder = l % (x - 1);
      std::vector<int> labeled;
      std::size_t pos = 0;
      for (std::size_t j = 0; j < x; ++j) {
        if (j == i) continue;
        const std::size_t quota = quota_base + (pos < remainder ? 1 : 0);
        ++pos;
        if (quota > plan.folds[j].size())
          throw std::invalid_argument(
              "make_folds: L too large for the fold allocation");
        labeled.insert(labeled.end(), plan.folds[j].begin(),
                       plan.folds[j].begin() + quota);
      }
      plan.train_labeled[i].push_back(std::move(labeled));
    }
  }
  return plan;
}

namespace detail {

inline double cross_feature_distance(const Column& train_col, std::size_t train_row,
                                     const Column& test_col, std::size_t test_row) {
  if (train_col.kind == FeatureKind::Nominal)
    return train_col.codes[train_row] != test_col.codes[test_row] ? 1.0 : 0.0;
  const double range = train_col.range();
  if (range <= 0.0) return 0.0;
  return std::abs(train_col.numeric[train_row] - test_col.numeric[test_row]) / range;
}

}  // namespace detail

/// Importance-weighted kNN. The distance is sum_i w_i d_i^2 with d_i the
/// per-feature distance (numeric ranges from the training data) and
/// w_i = max(importance_i, 0); when every weight vanishes all weights revert
/// to 1. Predictions average the k nearest labeled neighbors (majority vote
/// for classification, ties to the earliest category; neighbor ties to the
/// lower training index).
inline std::vector<std::vector<double>> knn_predict(
    const Dataset& train, const Dataset& test, std::size_t k,
    const std::vector<double>& importances) {
  if (k < 1) throw std::invalid_argument("knn_predict: k must be >= 1");
  if (importances.size() != train.feature_count())
    throw std::invalid_argument("knn_predict: weight vector size mismatch");
  const auto labeled = train.labeled_indices();
  if (labeled.size() < k)
    throw std::invalid_argument("knn_predict: fewer than k labeled training examples");

  std::vector<double> weights(importances.size());
  bool any_positive = false;
  for (std::size_t i = 0; i < importances.size(); ++i) {
    weights[i] = std::max(importances[i], 0.0);
    any_positive |= weights[i] > 0.0;
  }
  if (!any_positive) std::fill(weights.begin(), weights.end(), 1.0);

  const auto& t = train.targets;
  std::vector<std::vector<double>> out;
  out.reserve(test.size());
  std::vector<std::pair<double, int>> cand(labeled.size());

  for (std::size_t row = 0; row < test.size(); ++row) {
    for (std::size_t li = 0; li < labeled.size(); ++li) {
      double acc = 0.0;
      for (std::size_t f = 0; f < train.features.size(); ++f) {
        if (weights[f] == 0.0) continue;
        const double di = detail::cross_feature_distance(
            train.features[f], labeled[li], test.features[f], row);
        acc += weights[f] * di * di;
      }
      cand[li] = {acc, labeled[li]};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());

    if (t.task == Task::Classification) {
      std::vector<long> votes(t.columns[0].categories.size(), 0);
      for (std::size_t i = 0; i < k; ++i) ++votes[t.columns[0].codes[cand[i].second]];
      const auto it = std::max_element(votes.begin(), votes.end());
      out.push_back({static_cast<double>(it - votes.begin())});
    } else {
      std::vector<double> mean(t.columns.size(), 0.0);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < t.columns.size(); ++j)
          mean[j] += t.columns[j].numeric[cand[i].second];
      for (auto& v : mean) v /= static_cast<double>(k);
      out.push_back(std::move(mean));
    }
  }
  return out;
}

/// Performance curve over the labeled-budget grid with its normalized
/// trapezoidal area, i.e. the L-weighted mean performance.
struct PerformanceCurve {
  std::vector<std::pair<double, double>> points;  // (L, performance)
  double area = 0.0;
};

inline PerformanceCurve curve_and_area(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("curve_and_area: need at least two points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].first <= points[i - 1].first)
      throw std::invalid_argument("curve_and_area: L must be strictly increasing");
  PerformanceCurve c;
  c.points = points;
  double acc = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    acc += (points[i].first - points[i - 1].first) * 0.5 *
           (points[i].second + points[i - 1].second);
  c.area = acc / (points.back().first - points.front().first);
  return c;
}

/// Lloyd's algorithm with k-means++ style seeding; the best of `restarts`
/// runs by within-cluster sum of squares wins. Deterministic given the seed.
inline std::vector<int> kmeans(const EncodedMatrix& points, std::size_t k,
                               std::size_t restarts, std::uint64_t seed) {
  const std::size_t n = points.rows, cols = points.cols;
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto row_less = [&](std::size_t a, std::size_t b) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (points.at(a, c) < points.at(b, c)) return true;
        if (points.at(a, c) > points.at(b, c)) return false;
      }
      return false;
    };
    std::sort(idx.begin(), idx.end(), row_less);
    std::size_t distinct = n ? 1 : 0;
    for (std::size_t i = 1; i < n; ++i)
      if (row_less(idx[i - 1], idx[i])) ++distinct;
    if (k > distinct)
      throw std::invalid_argument("kmeans: k exceeds the number of distinct points");
  }

  auto dist2_to = [&](std::size_t row, const std::vector<double>& center) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double dv = points.at(row, c) - center[c];
      acc += dv * dv;
    }
    return acc;
  };

  auto rng = make_rng(seed);
  std::vector<int> best_assign;
  double best_wss = std::numeric_limits<double>::infinity();

  for (std::size_t run = 0; run < std::max<std::size_t>(1, restarts); ++run) {
    // k-means++ seeding
    std::vector<std::vector<double>> centers;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    {
      const std::size_t r = first(rng);
      centers.emplace_back(cols);
      for (std::size_t c = 0; c < cols; ++c) centers[0][c] = points.at(r, c);
    }
    std::vector<double> min_d2(n, 0.0);
    while (centers.size() < k) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) m = std::min(m, dist2_to(i, c));
        min_d2[i] = m;
        total += m;
      }
      std::size_t chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng), acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc >= target) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = first(rng);
      }
      centers.emplace_back(cols);
      for (std::size_t c = 0; c < cols; ++c)
        centers.back()[c] = points.at(chosen, c);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        int arg = 0;
        double best = dist2_to(i, centers[0]);
        for (std::size_t c = 1; c < k; ++c) {
          const double v = dist2_to(i, centers[c]);
          if (v < best) {
            best = v;
            arg = static_cast<int>(c);
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> mean(cols, 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (assign[i] != static_cast<int>(c)) continue;
          ++count;
          for (std::size_t cc = 0; cc < cols; ++cc) mean[cc] += points.at(i, cc);
        }
        if (count == 0) continue;  // empty cluster keeps its previous center
        for (auto& v : mean) v /= static_cast<double>(count);
        centers[c] = std::move(mean);
      }
    }

    double wss = 0.0;
    for (std::size_t i = 0; i < n; ++i) wss += dist2_to(i, centers[assign[i]]);
    if (wss < best_wss) {
      best_wss = wss;
      best_assign = assign;
    }
  }
  return best_assign;
}

/// Clustering-hypothesis estimate on a fully labeled dataset: k-means on the
/// one-hot encoded features (k = class count for classification, 8
/// otherwise, clamped to the number of distinct points; 5 restarts), then
/// the ARI against the classes, or 1 minus the relative within-cluster
/// variance of the targets (HMLC targets weighted by the hierarchy weights).
inline double ch_score(const Dataset& d, std::uint64_t seed = 0) {
  if (d.size() < 2)
    throw std::invalid_argument("ch_score: degenerate single-example dataset");
  if (d.labeled_count() != d.size())
    throw std::invalid_argument("ch_score: dataset must be fully labeled");
  const auto enc = one_hot_encode(d);

  std::size_t k = 8;
  if (d.targets.task == Task::Classification)
    k = d.targets.columns[0].categories.size();
  {
    // clamp k at the number of distinct encoded points
    std::vector<std::size_t> idx(enc.rows);
    std::iota(idx.begin(), idx.end(), 0);
    auto row_less = [&](std::size_t a, std::size_t b) {
      for (std::size_t c = 0; c < enc.cols; ++c) {
        if (enc.at(a, c) < enc.at(b, c)) return true;
        if (enc.at(a, c) > enc.at(b, c)) return false;
      }
      return false;
    };
    std::sort(idx.begin(), idx.end(), row_less);
    std::size_t distinct = enc.rows ? 1 : 0;
    for (std::size_t i = 1; i < enc.rows; ++i)
      if (row_less(idx[i - 1], idx[i])) ++distinct;
    k = std::min(k, distinct);
  }

  const auto assign = kmeans(enc, k, 5, seed);

  if (d.targets.task == Task::Classification) {
    return ari(assign, d.targets.columns[0].codes);
  }

  std::vector<std::vector<int>> clusters(k);
  for (std::size_t i = 0; i < assign.size(); ++i)
    clusters[assign[i]].push_back(static_cast<int>(i));
  std::vector<int> all(d.size());
  std::iota(all.begin(), all.end(), 0);

  const auto alphas = d.targets.alphas();
  double v_sum = 0.0, alpha_sum = 0.0;
  for (std::size_t j = 0; j < d.targets.columns.size(); ++j) {
    const auto& col = d.targets.columns[j];
    const double total_var = variance(col, all);
    if (total_var <= 0.0) continue;  // constant target carries no signal
    double vj = 0.0;
    for (const auto& c : clusters) {
      if (c.empty()) continue;
      const double p = static_cast<double>(c.size()) / static_cast<double>(d.size());
      vj += p * variance(col, c) / total_var;
    }
    v_sum += alphas[j] * vj;
    alpha_sum += alphas[j];
  }
  const double v = alpha_sum > 0.0 ? v_sum / alpha_sum : 0.0;
  return 1.0 - v;
}

}  // namespace sslrank

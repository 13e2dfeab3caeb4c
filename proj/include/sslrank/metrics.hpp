#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sslrank {

/// Macro-averaged F1 over classes 0..n_classes-1. Per class,
/// F1 = 2tp / (2tp + fp + fn), which is 0 whenever precision + recall is 0;
/// classes absent from both truth and predictions are skipped.
inline double f1_macro(const std::vector<int>& predictions,
                       const std::vector<int>& truth, int n_classes) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("f1_macro: size mismatch");
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < n_classes; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = predictions[i] == c, t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    if (tp + fp + fn == 0) continue;
    sum += static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    ++counted;
  }
  return counted ? sum / counted : 0.0;
}

/// Root relative mean squared error, averaged over targets; the per-target
/// normalizer is the population variance of the truth on the evaluation set.
/// A zero-variance target contributes 0 when predicted exactly and otherwise
/// marks the result invalid.
struct RrmseResult {
  double value = 0.0;
  bool valid = true;
};

inline RrmseResult rrmse(const std::vector<std::vector<double>>& predictions,
                         const std::vector<std::vector<double>>& truth) {
  if (predictions.size() != truth.size() || truth.empty())
    throw std::invalid_argument("rrmse: size mismatch or empty input");
  const std::size_t n = truth.size();
  const std::size_t t_count = truth.front().size();
  RrmseResult res;
  double sum = 0.0;
  for (std::size_t j = 0; j < t_count; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += truth[i][j];
    mean /= static_cast<double>(n);
    double var = 0.0, mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = truth[i][j] - mean;
      const double de = predictions[i][j] - truth[i][j];
      var += dv * dv;
      mse += de * de;
    }
    var /= static_cast<double>(n);
    mse /= static_cast<double>(n);
    if (var == 0.0) {
      if (mse != 0.0) res.valid = false;
      continue;  // exact predictions on a constant target contribute 0
    }
    sum += std::sqrt(mse / var);
  }
  res.value = sum / static_cast<double>(t_count);
  return res;
}

/// Area under the micro-averaged precision-recall curve. All (example,
/// label) pairs are pooled; thresholds sweep the distinct scores in
/// descending order and the area is the step sum of (r_t - r_{t-1}) * p_t
/// with no interpolation.
inline double auprc_micro(const std::vector<std::vector<double>>& scores,
                          const std::vector<std::vector<double>>& truth) {
  if (scores.size() != truth.size())
    throw std::invalid_argument("auprc_micro: size mismatch");
  std::vector<std::pair<double, int>> pairs;  // (score, is_relevant)
  long positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != truth[i].size())
      throw std::invalid_argument("auprc_micro: row width mismatch");
    for (std::size_t j = 0; j < scores[i].size(); ++j) {
      const int rel = truth[i][j] != 0.0 ? 1 : 0;
      positives += rel;
      pairs.emplace_back(scores[i][j], rel);
    }
  }
  if (positives == 0)
    throw std::invalid_argument("auprc_micro: truth has no relevant pairs");
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  double area = 0.0, prev_recall = 0.0;
  long tp = 0, seen = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    tp += pairs[i].second;
    ++seen;
    const bool boundary = i + 1 == pairs.size() || pairs[i + 1].first != pairs[i].first;
    if (!boundary) continue;
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

/// Adjusted Rand index via the pair-counting contingency formula. The
/// degenerate case where the correction denominator vanishes (both
/// partitions trivial in the same way) scores 1.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ari: size mismatch");
  if (a.empty()) return 1.0;
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<long> table(static_cast<std::size_t>(ka) * kb, 0);
  std::vector<long> row(ka, 0), col(kb, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) throw std::invalid_argument("ari: negative label");
    ++table[static_cast<std::size_t>(a[i]) * kb + b[i]];
    ++row[a[i]];
    ++col[b[i]];
  }
  auto comb2 = [](long n) { return 0.5 * static_cast<double>(n) * (n - 1); };
  double index = 0.0, row_sum = 0.0, col_sum = 0.0;
  for (long v : table) index += comb2(v);
  for (long v : row) row_sum += comb2(v);
  for (long v : col) col_sum += comb2(v);
  const double total = comb2(static_cast<long>(a.size()));
  const double expected = row_sum * col_sum / total;
  const double max_index = 0.5 * (row_sum + col_sum);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace sslrank

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslrank/csv.hpp"
#include "sslrank/dataset.hpp"
#include "sslrank/rng.hpp"

namespace sslrank {

/// Gini index 1 - sum_v p^2 over the observed values of a nominal column on
/// the given row multiset. Rows with a missing value (masked target, code -1)
/// are discarded; if nothing remains the index is 0.
inline double gini(const Column& c, std::span<const int> rows,
                   const std::vector<std::uint8_t>* labeled = nullptr) {
  std::vector<long> counts(c.categories.size(), 0);
  long n = 0;
  for (int r : rows) {
    if (labeled && !(*labeled)[r]) continue;
    if (c.codes[r] < 0) continue;
    ++counts[c.codes[r]];
    ++n;
  }
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (long v : counts) {
    const double p = static_cast<double>(v) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

/// Population variance of a numeric column on the given row multiset,
/// ignoring missing values. Exactly 0 when all observed values coincide.
inline double variance(const Column& c, std::span<const int> rows,
                       const std::vector<std::uint8_t>* labeled = nullptr) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double mean = 0.0;
  long n = 0;
  for (int r : rows) {
    if (labeled && !(*labeled)[r]) continue;
    const double v = c.numeric[r];
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
    ++n;
  }
  if (n == 0 || lo == hi) return 0.0;
  mean /= static_cast<double>(n);
  double acc = 0.0;
  for (int r : rows) {
    if (labeled && !(*labeled)[r]) continue;
    const double v = c.numeric[r];
    if (std::isnan(v)) continue;
    const double dv = v - mean;
    acc += dv * dv;
  }
  return acc / static_cast<double>(n);
}

enum class SplitMode { Exhaustive, SingleRandom };

struct PctParams {
  double supervision = 1.0;          // w in [0,1]; 1 = fully supervised
  std::size_t min_leaf_size = 2;
  std::size_t feature_subset = 0;    // D'; 0 (or >= D) considers all features
  SplitMode split_mode = SplitMode::Exhaustive;
  double prototype_threshold = 0.5;  // theta for MLC/HMLC set-valued output
  std::uint64_t seed = 0;
};

/// A binary split: numeric features send value <= threshold left, nominal
/// features send the accepted category left.
struct SplitTest {
  int feature = -1;
  double threshold = 0.0;
  int category = -1;
};

struct TreeNode {
  SplitTest test;
  double h_star = 0.0;
  int n_reached = 0;
  int left = -1, right = -1;
  std::vector<double> prototype;  // leaves only

  bool is_leaf() const { return left < 0; }
};

/// Flat binary tree, root at index 0.
struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  std::size_t leaf_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node.is_leaf();
    return n;
  }
};

namespace detail {

/// One clustering variable of Eq-(1)-style impurity: a target or feature
/// column with its weight already divided by the training-set normalizer.
/// Variables whose weight or normalizer is 0 are dropped from the model.
struct ClusterVar {
  const Column* column = nullptr;
  const std::vector<std::uint8_t>* mask = nullptr;  // labeled mask for targets
  double factor = 0.0;                              // weight / normalizer
  bool nominal = false;
  int category_count = 0;
  int count_offset = 0;  // slot into the nominal count arena
};

/// Additive per-side statistics for every clustering variable, updated as
/// the threshold sweep moves examples across the split.
struct SweepSide {
  std::vector<double> sum, sumsq;
  std::vector<long> obs;
  std::vector<long> counts;

  void init(const std::vector<ClusterVar>& vars, int count_arena) {
    sum.assign(vars.size(), 0.0);
    sumsq.assign(vars.size(), 0.0);
    obs.assign(vars.size(), 0);
    counts.assign(count_arena, 0);
  }
  void reset() {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(sumsq.begin(), sumsq.end(), 0.0);
    std::fill(obs.begin(), obs.end(), 0);
    std::fill(counts.begin(), counts.end(), 0);
  }
};

}  // namespace detail

/// Impurity of Eq-(1) shape bound to one tree-growing run: per-variable
/// normalizers are computed once, on the multiset the tree is grown from.
/// Targets are measured over labeled examples only; features over all
/// examples (features carry no missing values after load-time imputation).
class ImpurityModel {
 public:
  ImpurityModel(const Dataset& d, const PctParams& p, std::span<const int> root_rows)
      : dataset_(&d) {
    const double w = p.supervision;
    if (w < 0.0 || w > 1.0)
      throw std::invalid_argument("supervision w must lie in [0,1]");
    const auto& t = d.targets;
    const auto alphas = t.alphas();
    const double t_count = static_cast<double>(t.columns.size());
    int arena = 0;
    if (w > 0.0) {
      for (std::size_t j = 0; j < t.columns.size(); ++j) {
        const auto& c = t.columns[j];
        const double norm = c.kind == FeatureKind::Nominal
                                ? gini(c, root_rows, &t.labeled)
                                : variance(c, root_rows, &t.labeled);
        if (norm <= 0.0) continue;
        detail::ClusterVar v;
        v.column = &c;
        v.mask = &t.labeled;
        v.factor = w * alphas[j] / t_count / norm;
        v.nominal = c.kind == FeatureKind::Nominal;
        if (v.nominal) {
          v.category_count = static_cast<int>(c.categories.size());
          v.count_offset = arena;
          arena += v.category_count;
        }
        vars_.push_back(v);
      }
    }
    if (w < 1.0 && !d.features.empty()) {
      const double d_count = static_cast<double>(d.features.size());
      for (const auto& c : d.features) {
        const double norm = c.kind == FeatureKind::Nominal ? gini(c, root_rows)
                                                           : variance(c, root_rows);
        if (norm <= 0.0) continue;
        detail::ClusterVar v;
        v.column = &c;
        v.factor = (1.0 - w) / d_count / norm;
        v.nominal = c.kind == FeatureKind::Nominal;
        if (v.nominal) {
          v.category_count = static_cast<int>(c.categories.size());
          v.count_offset = arena;
          arena += v.category_count;
        }
        vars_.push_back(v);
      }
    }
    count_arena_ = arena;
  }

  const Dataset& dataset() const { return *dataset_; }
  const std::vector<detail::ClusterVar>& variables() const { return vars_; }
  int count_arena() const { return count_arena_; }

  /// Direct Eq-(1) impurity of a row multiset, using exact per-variable
  /// measures (a constant variable scores exactly 0).
  double impurity(std::span<const int> rows) const {
    double total = 0.0;
    for (const auto& v : vars_) {
      const double raw = v.nominal ? gini(*v.column, rows, v.mask)
                                   : variance(*v.column, rows, v.mask);
      total += v.factor * raw;
    }
    return total;
  }

  void accumulate(detail::SweepSide& side, int row, double sign) const {
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const auto& v = vars_[k];
      if (v.mask && !(*v.mask)[row]) continue;
      if (v.nominal) {
        const int code = v.column->codes[row];
        if (code < 0) continue;
        side.counts[v.count_offset + code] += sign > 0 ? 1 : -1;
        side.obs[k] += sign > 0 ? 1 : -1;
      } else {
        const double val = v.column->numeric[row];
        if (std::isnan(val)) continue;
        side.sum[k] += sign * val;
        side.sumsq[k] += sign * val * val;
        side.obs[k] += sign > 0 ? 1 : -1;
      }
    }
  }

  /// Fast impurity from running sums; used only to rank split candidates.
  double impurity(const detail::SweepSide& side) const {
    double total = 0.0;
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const auto& v = vars_[k];
      const long n = side.obs[k];
      if (n <= 0) continue;
      double raw;
      if (v.nominal) {
        double sum_sq = 0.0;
        for (int c = 0; c < v.category_count; ++c) {
          const double p = static_cast<double>(side.counts[v.count_offset + c]) /
                           static_cast<double>(n);
          sum_sq += p * p;
        }
        raw = 1.0 - sum_sq;
      } else {
        const double mean = side.sum[k] / static_cast<double>(n);
        raw = side.sumsq[k] / static_cast<double>(n) - mean * mean;
        if (raw < 0.0) raw = 0.0;
      }
      total += v.factor * raw;
    }
    return total;
  }

 private:
  const Dataset* dataset_;
  std::vector<detail::ClusterVar> vars_;
  int count_arena_ = 0;
};

struct BestTestResult {
  bool found = false;
  SplitTest test;
  double h_star = 0.0;
  std::vector<int> left, right;
};

namespace detail {

inline std::vector<int> sample_features(std::size_t d, std::size_t subset,
                                        std::mt19937_64& rng) {
  std::vector<int> pool(d);
  std::iota(pool.begin(), pool.end(), 0);
  if (subset == 0 || subset >= d) return pool;
  for (std::size_t j = 0; j < subset; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, d - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  pool.resize(subset);
  std::sort(pool.begin(), pool.end());  // candidate order fixes tie-breaking
  return pool;
}

}  // namespace detail

/// Alg-2 search: over a sampled subset of D' features, enumerate candidate
/// tests (exhaustive: midpoints between consecutive distinct values and
/// one-category-vs-rest; single_random: one random threshold / category per
/// feature), keep the candidate maximizing
///   h = |E| impu(E) - |E_L| impu(E_L) - |E_R| impu(E_R)
/// subject to both children holding at least min_leaf_size examples. Returns
/// found=false when no candidate has h > 0. Candidates are visited in
/// ascending (feature, threshold/category) order, so ties resolve to the
/// lowest feature index and then the lowest threshold / first category. The
/// winner's h* is recomputed with exact measures before it is accepted.
inline BestTestResult best_test(std::span<const int> rows, const Dataset& d,
                                const PctParams& p, const ImpurityModel& model,
                                std::mt19937_64& rng) {
  BestTestResult result;
  const std::size_t n = rows.size();
  if (n < 2 * p.min_leaf_size) return result;

  const auto features = detail::sample_features(
      d.feature_count(), p.feature_subset, rng);

  detail::SweepSide left, right;
  left.init(model.variables(), model.count_arena());
  right.init(model.variables(), model.count_arena());

  const double node_impurity = model.impurity(rows);
  const double node_term = static_cast<double>(n) * node_impurity;
  const long min_leaf = static_cast<long>(p.min_leaf_size);

  double best_h = 0.0;
  SplitTest best;
  std::vector<int> sorted(rows.begin(), rows.end());

  auto consider = [&](double h, int feature, double threshold, int category) {
    if (h > best_h) {
      best_h = h;
      best.feature = feature;
      best.threshold = threshold;
      best.category = category;
    }
  };

  for (int f : features) {
    const auto& col = d.features[f];
    if (col.kind == FeatureKind::Numeric) {
      if (p.split_mode == SplitMode::Exhaustive) {
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
          return col.numeric[a] < col.numeric[b];
        });
        left.reset();
        right.reset();
        for (int r : sorted) model.accumulate(right, r, +1.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
          model.accumulate(left, sorted[i], +1.0);
          model.accumulate(right, sorted[i], -1.0);
          const double lo = col.numeric[sorted[i]];
          const double hi = col.numeric[sorted[i + 1]];
          if (lo == hi) continue;
          const long n_left = static_cast<long>(i) + 1;
          const long n_right = static_cast<long>(n) - n_left;
          if (n_left < min_leaf || n_right < min_leaf) continue;
          const double h = node_term -
                           static_cast<double>(n_left) * model.impurity(left) -
                           static_cast<double>(n_right) * model.impurity(right);
          consider(h, f, lo + 0.5 * (hi - lo), -1);
        }
      } else {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int r : rows) {
          lo = std::min(lo, col.numeric[r]);
          hi = std::max(hi, col.numeric[r]);
        }
        if (lo >= hi) continue;
        std::uniform_real_distribution<double> pick(lo, hi);
        const double threshold = pick(rng);
        left.reset();
        right.reset();
        long n_left = 0;
        for (int r : rows) {
          if (col.numeric[r] <= threshold) {
            model.accumulate(left, r, +1.0);
            ++n_left;
          } else {
            model.accumulate(right, r, +1.0);
          }
        }
        const long n_right = static_cast<long>(n) - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double h = node_term -
                         static_cast<double>(n_left) * model.impurity(left) -
                         static_cast<double>(n_right) * model.impurity(right);
        consider(h, f, threshold, -1);
      }
    } else {
      const int n_cat = static_cast<int>(col.categories.size());
      auto eval_category = [&](int cat) {
        left.reset();
        right.reset();
        long n_left = 0;
        for (int r : rows) {
          if (col.codes[r] == cat) {
            model.accumulate(left, r, +1.0);
            ++n_left;
          } else {
            model.accumulate(right, r, +1.0);
          }
        }
        const long n_right = static_cast<long>(n) - n_left;
        if (n_left < min_leaf || n_right < min_leaf) return;
        const double h = node_term -
                         static_cast<double>(n_left) * model.impurity(left) -
                         static_cast<double>(n_right) * model.impurity(right);
        consider(h, f, 0.0, cat);
      };
      if (p.split_mode == SplitMode::Exhaustive) {
        for (int cat = 0; cat < n_cat; ++cat) eval_category(cat);
      } else {
        std::uniform_int_distribution<int> pick(0, n_cat - 1);
        eval_category(pick(rng));
      }
    }
  }

  if (best.feature < 0) return result;

  result.left.reserve(n);
  result.right.reserve(n);
  const auto& col = d.features[best.feature];
  for (int r : rows) {
    const bool goes_left = col.kind == FeatureKind::Numeric
                               ? col.numeric[r] <= best.threshold
                               : col.codes[r] == best.category;
    (goes_left ? result.left : result.right).push_back(r);
  }
  // The recorded h* is the exact recomputation of the winning candidate;
  // a value that no longer clears 0 demotes the node to a leaf.
  result.h_star = static_cast<double>(n) * model.impurity(rows) -
                  static_cast<double>(result.left.size()) * model.impurity(result.left) -
                  static_cast<double>(result.right.size()) * model.impurity(result.right);
  if (result.h_star <= 0.0) return BestTestResult{};
  result.found = true;
  result.test = best;
  return result;
}

/// Leaf prediction from the labeled examples of a row multiset:
/// classification gives the majority class code (ties to the earliest
/// declared category), every other task the per-target mean. MLC/HMLC
/// prototypes stay real-valued in [0, 1].
inline std::vector<double> prototype(const Dataset& d, std::span<const int> rows) {
  const auto& t = d.targets;
  if (t.task == Task::Classification) {
    const auto& c = t.columns[0];
    std::vector<long> counts(c.categories.size(), 0);
    for (int r : rows)
      if (t.labeled[r] && c.codes[r] >= 0) ++counts[c.codes[r]];
    const auto it = std::max_element(counts.begin(), counts.end());
    return {static_cast<double>(it - counts.begin())};
  }
  std::vector<double> mean(t.columns.size(), 0.0);
  long n = 0;
  for (int r : rows) {
    if (!t.labeled[r]) continue;
    ++n;
    for (std::size_t j = 0; j < t.columns.size(); ++j)
      mean[j] += t.columns[j].numeric[r];
  }
  if (n > 0)
    for (auto& v : mean) v /= static_cast<double>(n);
  return mean;
}

/// MLC/HMLC set-valued output: label codes whose prototype score clears the
/// threshold theta.
inline std::vector<int> threshold_labels(const std::vector<double>& proto,
                                         double theta) {
  std::vector<int> out;
  for (std::size_t j = 0; j < proto.size(); ++j)
    if (proto[j] >= theta) out.push_back(static_cast<int>(j));
  return out;
}

namespace detail {

struct TreeGrower {
  const Dataset& d;
  const PctParams& p;
  ImpurityModel model;
  std::mt19937_64& rng;
  Tree tree;
  std::vector<int> fallback_rows;  // labeled rows backing empty-leaf prototypes

  TreeGrower(const Dataset& dataset, const PctParams& params,
             std::span<const int> root_rows, std::mt19937_64& r)
      : d(dataset), p(params), model(dataset, params, root_rows), rng(r) {
    for (int row : root_rows)
      if (d.is_labeled(row)) fallback_rows.push_back(row);
    if (fallback_rows.empty()) fallback_rows = d.labeled_indices();
    if (fallback_rows.empty())
      throw std::invalid_argument("grow_tree: no labeled examples available");
  }

  int make_leaf(std::span<const int> rows) {
    TreeNode node;
    node.n_reached = static_cast<int>(rows.size());
    bool any_labeled = false;
    for (int r : rows)
      if (d.is_labeled(r)) {
        any_labeled = true;
        break;
      }
    node.prototype = any_labeled ? prototype(d, rows) : prototype(d, fallback_rows);
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  int grow(std::vector<int>& rows) {
    if (rows.size() < 2 * p.min_leaf_size || model.impurity(rows) == 0.0)
      return make_leaf(rows);
    auto split = best_test(rows, d, p, model, rng);
    if (!split.found) return make_leaf(rows);

    const int self = static_cast<int>(tree.nodes.size());
    {
      TreeNode node;
      node.test = split.test;
      node.h_star = split.h_star;
      node.n_reached = static_cast<int>(rows.size());
      tree.nodes.push_back(std::move(node));
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = grow(split.left);
    const int right = grow(split.right);
    tree.nodes[self].left = left;
    tree.nodes[self].right = right;
    return self;
  }
};

}  // namespace detail

/// Alg-1 top-down induction on a row multiset (bootstrap repeats allowed).
/// Deterministic given (dataset, params, rng state). Stops on
/// |E| < 2 min_leaf_size, impurity 0, or no candidate with h > 0.
inline Tree grow_tree(const std::vector<int>& rows, const Dataset& d,
                      const PctParams& p, std::mt19937_64& rng) {
  if (rows.empty()) throw std::invalid_argument("grow_tree: empty example set");
  if (p.min_leaf_size < 1)
    throw std::invalid_argument("grow_tree: min_leaf_size must be >= 1");
  detail::TreeGrower grower(d, p, rows, rng);
  std::vector<int> work(rows);
  grower.grow(work);
  return std::move(grower.tree);
}

inline Tree grow_tree(const std::vector<int>& rows, const Dataset& d,
                      const PctParams& p) {
  auto rng = make_rng(p.seed);
  return grow_tree(rows, d, p, rng);
}

inline Tree grow_tree(const Dataset& d, const PctParams& p) {
  std::vector<int> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return grow_tree(rows, d, p);
}

/// Route a dataset row to its leaf. A single feature value can be overridden
/// (used by permutation importance) without touching the dataset.
inline int leaf_for_row(const Tree& t, const Dataset& d, std::size_t row,
                        int override_feature = -1, double override_numeric = 0.0,
                        int override_code = -1) {
  int node = 0;
  while (!t.nodes[node].is_leaf()) {
    const auto& test = t.nodes[node].test;
    const auto& col = d.features[test.feature];
    bool goes_left;
    if (col.kind == FeatureKind::Numeric) {
      const double v = test.feature == override_feature ? override_numeric
                                                        : col.numeric[row];
      goes_left = v <= test.threshold;
    } else {
      const int v = test.feature == override_feature ? override_code
                                                     : col.codes[row];
      goes_left = v == test.category;
    }
    node = goes_left ? t.nodes[node].left : t.nodes[node].right;
  }
  return node;
}

inline const std::vector<double>& predict_row(const Tree& t, const Dataset& d,
                                              std::size_t row) {
  return t.nodes[leaf_for_row(t, d, row)].prototype;
}

namespace detail {

inline void append_node(const Tree& t, int index, int depth, std::string& out) {
  const auto& node = t.nodes[index];
  out.append(static_cast<std::size_t>(2 * depth), ' ');
  if (node.is_leaf()) {
    out += "leaf n=" + std::to_string(node.n_reached) + " prototype=[";
    for (std::size_t j = 0; j < node.prototype.size(); ++j) {
      if (j) out += ' ';
      out += csv::format_double(node.prototype[j]);
    }
    out += "]\n";
    return;
  }
  out += "node f=" + std::to_string(node.test.feature);
  if (node.test.category >= 0)
    out += " cat=" + std::to_string(node.test.category);
  else
    out += " thr=" + csv::format_double(node.test.threshold);
  out += " h*=" + csv::format_double(node.h_star);
  out += " n=" + std::to_string(node.n_reached) + "\n";
  append_node(t, node.left, depth + 1, out);
  append_node(t, node.right, depth + 1, out);
}

}  // namespace detail

/// Nested text form with test, h*, n_reached and prototypes; used for
/// inspection and golden tests.
inline std::string to_text(const Tree& t) {
  std::string out;
  detail::append_node(t, 0, 0, out);
  return out;
}

}  // namespace sslrank

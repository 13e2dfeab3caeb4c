#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sslrank/dataset.hpp"
#include "sslrank/ensemble.hpp"
#include "sslrank/metrics.hpp"
#include "sslrank/pct.hpp"
#include "sslrank/ranking.hpp"
#include "sslrank/rng.hpp"

namespace sslrank {

/// Per-tree Symbolic contributions: each internal node testing feature i
/// adds n_reached / M.
inline std::vector<double> symbolic_tree_contribution(const Tree& t,
                                                      std::size_t n_features,
                                                      std::size_t m) {
  std::vector<double> out(n_features, 0.0);
  for (const auto& node : t.nodes)
    if (!node.is_leaf())
      out[node.test.feature] +=
          static_cast<double>(node.n_reached) / static_cast<double>(m);
  return out;
}

/// Per-tree Genie3 contributions: each internal node testing feature i adds
/// its heuristic value h*.
inline std::vector<double> genie3_tree_contribution(const Tree& t,
                                                    std::size_t n_features) {
  std::vector<double> out(n_features, 0.0);
  for (const auto& node : t.nodes)
    if (!node.is_leaf()) out[node.test.feature] += node.h_star;
  return out;
}

inline FeatureRanking symbolic_score(const Ensemble& e, std::size_t n_features) {
  if (e.trees.empty()) throw std::invalid_argument("symbolic_score: empty ensemble");
  FeatureRanking r;
  r.method = "symbolic";
  r.scores.assign(n_features, 0.0);
  for (const auto& t : e.trees) {
    const auto c = symbolic_tree_contribution(t, n_features, e.trained_size);
    for (std::size_t i = 0; i < n_features; ++i) r.scores[i] += c[i];
  }
  for (auto& s : r.scores) s /= static_cast<double>(e.trees.size());
  return r;
}

inline FeatureRanking genie3_score(const Ensemble& e, std::size_t n_features) {
  if (e.trees.empty()) throw std::invalid_argument("genie3_score: empty ensemble");
  FeatureRanking r;
  r.method = "genie3";
  r.scores.assign(n_features, 0.0);
  for (const auto& t : e.trees) {
    const auto c = genie3_tree_contribution(t, n_features);
    for (std::size_t i = 0; i < n_features; ++i) r.scores[i] += c[i];
  }
  for (auto& s : r.scores) s /= static_cast<double>(e.trees.size());
  return r;
}

namespace detail {

/// Tree loss on the labeled out-of-bag examples; nullopt when the loss is
/// undefined for this tree (no labeled example, degenerate metric).
/// A feature override is applied before routing, for permutation scores.
struct OobOverride {
  int feature = -1;
  // per oob position, the replacement value (numeric or code)
  const std::vector<double>* numeric = nullptr;
  const std::vector<int>* codes = nullptr;
};

inline std::optional<double> try_oob_error(const Tree& t, const Dataset& d,
                                           const std::vector<int>& oob,
                                           const OobOverride& ov = {}) {
  const auto& targets = d.targets;
  auto predict = [&](std::size_t pos) -> const std::vector<double>& {
    const int row = oob[pos];
    if (ov.feature < 0) return predict_row(t, d, row);
    const double num = ov.numeric ? (*ov.numeric)[pos] : 0.0;
    const int code = ov.codes ? (*ov.codes)[pos] : -1;
    return t.nodes[leaf_for_row(t, d, row, ov.feature, num, code)].prototype;
  };

  if (targets.task == Task::Classification) {
    long n = 0, wrong = 0;
    for (std::size_t pos = 0; pos < oob.size(); ++pos) {
      if (!d.is_labeled(oob[pos])) continue;
      ++n;
      const int predicted = static_cast<int>(predict(pos)[0]);
      wrong += predicted != targets.columns[0].codes[oob[pos]];
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(wrong) / static_cast<double>(n);
  }

  std::vector<std::vector<double>> preds, truth;
  for (std::size_t pos = 0; pos < oob.size(); ++pos) {
    if (!d.is_labeled(oob[pos])) continue;
    preds.push_back(predict(pos));
    std::vector<double> y;
    for (const auto& c : targets.columns) y.push_back(c.numeric[oob[pos]]);
    truth.push_back(std::move(y));
  }
  if (truth.empty()) return std::nullopt;

  if (targets.task == Task::Str || targets.task == Task::Mtr) {
    const auto res = rrmse(preds, truth);
    if (!res.valid) return std::nullopt;
    return res.value;
  }
  // MLC / HMLC: loss is 1 - micro-averaged AUPRC of the leaf scores.
  bool any_relevant = false;
  for (const auto& y : truth)
    for (double v : y) any_relevant |= v != 0.0;
  if (!any_relevant) return std::nullopt;
  return 1.0 - auprc_micro(preds, truth);
}

}  // namespace detail

/// Task-specific loss of a tree on its labeled out-of-bag examples:
/// misclassification rate, RRMSE (variance taken on the labeled oob subset),
/// or 1 - micro-AUPRC. Throws when no labeled oob example exists, signalling
/// that the Random Forest score is unavailable for this tree.
inline double oob_error(const Tree& t, const Dataset& d,
                        const std::vector<int>& oob) {
  auto res = detail::try_oob_error(t, d, oob);
  if (!res)
    throw std::runtime_error(
        "oob_error: no labeled out-of-bag example; Random Forest score "
        "unavailable for this tree");
  return *res;
}

/// Eq-(4) permutation importance. Per tree, each feature's values are
/// permuted uniformly within the tree's out-of-bag subset (one permutation
/// per (tree, feature) pair, drawn from substream mix(seed, tree, feature))
/// and the relative error increase is averaged over the trees with a defined
/// oob error. A tree with zero baseline error contributes 0. All three task
/// losses are loss-oriented, so no sign flip applies.
inline FeatureRanking rf_score(const Ensemble& e, const Dataset& d,
                               std::uint64_t seed) {
  const std::size_t n_features = d.feature_count();
  FeatureRanking r;
  r.method = "rf";
  r.scores.assign(n_features, 0.0);
  if (e.trees.empty()) throw std::invalid_argument("rf_score: empty ensemble");

  std::size_t used = 0;
  for (std::size_t ti = 0; ti < e.trees.size(); ++ti) {
    const auto& oob = e.oob[ti];
    if (oob.empty()) {
      if (!e.params.bootstrap && e.params.method == EnsembleMethod::ExtraTrees)
        throw std::invalid_argument(
            "rf_score: ensemble was grown without bootstrapping");
      continue;
    }
    const auto base = detail::try_oob_error(e.trees[ti], d, oob);
    if (!base) continue;
    ++used;
    if (*base == 0.0) continue;  // perfect tree: every feature term is 0

    for (std::size_t f = 0; f < n_features; ++f) {
      auto rng = make_rng(mix_seed(seed, ti, f));
      std::vector<int> perm(oob.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);

      detail::OobOverride ov;
      ov.feature = static_cast<int>(f);
      std::vector<double> numeric;
      std::vector<int> codes;
      const auto& col = d.features[f];
      if (col.kind == FeatureKind::Numeric) {
        numeric.resize(oob.size());
        for (std::size_t pos = 0; pos < oob.size(); ++pos)
          numeric[pos] = col.numeric[oob[perm[pos]]];
        ov.numeric = &numeric;
      } else {
        codes.resize(oob.size());
        for (std::size_t pos = 0; pos < oob.size(); ++pos)
          codes[pos] = col.codes[oob[perm[pos]]];
        ov.codes = &codes;
      }
      const auto permuted = detail::try_oob_error(e.trees[ti], d, oob, ov);
      if (permuted) r.scores[f] += (*permuted - *base) / *base;
    }
  }
  if (used == 0)
    throw std::runtime_error(
        "rf_score: no tree has a labeled out-of-bag example");
  for (auto& s : r.scores) s /= static_cast<double>(used);
  return r;
}

struct AllRankings {
  FeatureRanking symbolic;
  FeatureRanking genie3;
  FeatureRanking rf;
};

/// All three scores from a single ensemble.
inline AllRankings rank_all(const Dataset& d, const EnsembleParams& ep,
                            const PctParams& pp, std::uint64_t rf_seed) {
  const auto e = grow_ensemble(d, ep, pp);
  AllRankings out;
  out.symbolic = symbolic_score(e, d.feature_count());
  out.genie3 = genie3_score(e, d.feature_count());
  out.rf = rf_score(e, d, rf_seed);
  return out;
}

}  // namespace sslrank

#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "sslrank/dataset.hpp"
#include "sslrank/pct.hpp"
#include "sslrank/rng.hpp"

namespace sslrank {

enum class EnsembleMethod { Bagging, RandomForest, ExtraTrees };

inline const char* ensemble_method_name(EnsembleMethod m) {
  switch (m) {
    case EnsembleMethod::Bagging: return "bagging";
    case EnsembleMethod::RandomForest: return "rf";
    case EnsembleMethod::ExtraTrees: return "et";
  }
  return "?";
}

inline EnsembleMethod parse_ensemble_method(const std::string& s) {
  if (s == "bagging") return EnsembleMethod::Bagging;
  if (s == "rf" || s == "random_forest") return EnsembleMethod::RandomForest;
  if (s == "et" || s == "extra_trees") return EnsembleMethod::ExtraTrees;
  throw std::invalid_argument("unknown ensemble method: '" + s + "'");
}

struct EnsembleParams {
  EnsembleMethod method = EnsembleMethod::RandomForest;
  std::size_t n_trees = 100;
  bool bootstrap = true;  // forced on for Bagging and Random Forests
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct Ensemble {
  std::vector<Tree> trees;
  std::vector<std::vector<int>> oob;  // per tree, ascending out-of-bag indices
  EnsembleParams params;
  PctParams pct_params;
  std::size_t trained_size = 0;  // |D_TRAIN|
};

struct BootstrapSample {
  std::vector<int> sample;  // size M, drawn with replacement
  std::vector<int> oob;     // indices never drawn, ascending
};

/// M uniform draws with replacement plus the complement of the drawn support.
inline BootstrapSample bootstrap_sample(std::size_t m, std::mt19937_64& rng) {
  if (m == 0) throw std::invalid_argument("bootstrap_sample: M must be >= 1");
  BootstrapSample out;
  out.sample.resize(m);
  std::vector<std::uint8_t> seen(m, 0);
  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = pick(rng);
    out.sample[i] = static_cast<int>(j);
    seen[j] = 1;
  }
  for (std::size_t j = 0; j < m; ++j)
    if (!seen[j]) out.oob.push_back(static_cast<int>(j));
  return out;
}

/// Per-method feature subset size: D for Bagging and Extra Trees,
/// ceil(sqrt(D)) for Random Forests.
inline std::size_t feature_subset_for(EnsembleMethod m, std::size_t d) {
  if (m == EnsembleMethod::RandomForest)
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  return d;
}

/// Grow tree `index` of the ensemble. Each tree draws from its own rng
/// substream mix_seed(master, index), so the result is independent of the
/// order trees are built in.
inline std::pair<Tree, std::vector<int>> grow_ensemble_tree(
    const Dataset& d, const EnsembleParams& ep, const PctParams& pp,
    std::size_t index) {
  auto rng = make_rng(ep.seed, index);
  PctParams tree_params = pp;
  tree_params.feature_subset = feature_subset_for(ep.method, d.feature_count());
  tree_params.split_mode = ep.method == EnsembleMethod::ExtraTrees
                               ? SplitMode::SingleRandom
                               : SplitMode::Exhaustive;
  const bool bootstrap = ep.bootstrap || ep.method != EnsembleMethod::ExtraTrees;
  if (bootstrap) {
    auto bs = bootstrap_sample(d.size(), rng);
    return {grow_tree(bs.sample, d, tree_params, rng), std::move(bs.oob)};
  }
  std::vector<int> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);
  return {grow_tree(rows, d, tree_params, rng), {}};
}

inline Ensemble grow_ensemble(const Dataset& d, const EnsembleParams& ep,
                              const PctParams& pp) {
  if (ep.n_trees == 0) throw std::invalid_argument("n_trees must be >= 1");
  Ensemble e;
  e.params = ep;
  e.pct_params = pp;
  e.trained_size = d.size();
  e.trees.resize(ep.n_trees);
  e.oob.resize(ep.n_trees);

  const std::size_t jobs = std::max<std::size_t>(1, ep.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < ep.n_trees; ++i) {
      auto [tree, oob] = grow_ensemble_tree(d, ep, pp, i);
      e.trees[i] = std::move(tree);
      e.oob[i] = std::move(oob);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= ep.n_trees) return;
        auto [tree, oob] = grow_ensemble_tree(d, ep, pp, i);
        e.trees[i] = std::move(tree);
        e.oob[i] = std::move(oob);
      }
    };
    std::vector<std::future<void>> pool;
    for (std::size_t j = 0; j < jobs; ++j)
      pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
  }
  return e;
}

}  // namespace sslrank

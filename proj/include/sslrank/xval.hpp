#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslrank/dataset.hpp"
#include "sslrank/ensemble.hpp"
#include "sslrank/ensemble_scores.hpp"
#include "sslrank/evaluation.hpp"
#include "sslrank/laplace.hpp"
#include "sslrank/metrics.hpp"
#include "sslrank/ranking.hpp"
#include "sslrank/relief.hpp"

namespace sslrank {

enum class RankMethod { Symbolic, Genie3, Rf, Relief, Laplace };

inline const char* rank_method_name(RankMethod m) {
  switch (m) {
    case RankMethod::Symbolic: return "symbolic";
    case RankMethod::Genie3: return "genie3";
    case RankMethod::Rf: return "rf";
    case RankMethod::Relief: return "relief";
    case RankMethod::Laplace: return "laplace";
  }
  return "?";
}

inline RankMethod parse_rank_method(const std::string& s) {
  if (s == "symbolic") return RankMethod::Symbolic;
  if (s == "genie3") return RankMethod::Genie3;
  if (s == "rf") return RankMethod::Rf;
  if (s == "relief") return RankMethod::Relief;
  if (s == "laplace") return RankMethod::Laplace;
  throw std::invalid_argument("unknown ranking method: '" + s + "'");
}

/// RRMSE is a loss (lower is better); F1 and AUPRC are gains.
inline bool loss_oriented(Task t) { return t == Task::Str || t == Task::Mtr; }

struct MetricValue {
  double value = 0.0;
  bool valid = true;
};

/// Task metric of an importance-weighted kNN model trained on `train` and
/// scored on the labeled examples of `test`.
inline MetricValue evaluate_ranking(const Dataset& train, const Dataset& test,
                                    std::size_t k,
                                    const std::vector<double>& importances) {
  const auto preds = knn_predict(train, test, k, importances);
  const auto& t = test.targets;
  MetricValue out;
  if (t.task == Task::Classification) {
    std::vector<int> predicted, truth;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (!test.is_labeled(i)) continue;
      predicted.push_back(static_cast<int>(preds[i][0]));
      truth.push_back(t.columns[0].codes[i]);
    }
    out.value = f1_macro(predicted, truth,
                         static_cast<int>(t.columns[0].categories.size()));
    return out;
  }
  std::vector<std::vector<double>> predicted, truth;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!test.is_labeled(i)) continue;
    predicted.push_back(preds[i]);
    std::vector<double> y;
    for (const auto& c : t.columns) y.push_back(c.numeric[i]);
    truth.push_back(std::move(y));
  }
  if (t.task == Task::Str || t.task == Task::Mtr) {
    const auto r = rrmse(predicted, truth);
    out.value = r.value;
    out.valid = r.valid;
    return out;
  }
  out.value = auprc_micro(predicted, truth);
  return out;
}

struct XvalConfig {
  std::size_t x = 10;
  std::vector<std::size_t> l_grid{50, 100, 200, 350, 500};
  std::vector<std::size_t> knn_ks{20, 40};
  RankMethod method = RankMethod::Symbolic;
  EnsembleParams ensemble;
  PctParams pct;
  ReliefParams relief;
  LaplaceParams laplace;
  bool grid_search = false;
  std::vector<double> w_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                             0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> relief_w_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::size_t> relief_k_grid{15, 20, 30};
  std::size_t internal_folds = 4;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct XvalCell {
  std::size_t fold = 0;
  std::size_t l_index = 0;
  std::size_t test_size = 0;
  std::vector<MetricValue> ssl_perf, sl_perf;  // parallel to knn_ks
  FeatureRanking ssl_ranking, sl_ranking;
  double selected_w = std::numeric_limits<double>::quiet_NaN();
  double selected_w0 = std::numeric_limits<double>::quiet_NaN();
  double selected_w1 = std::numeric_limits<double>::quiet_NaN();
  std::size_t selected_k = 0;
};

struct XvalCurves {
  std::size_t k = 0;
  PerformanceCurve ssl, sl;
  double delta = 0.0;  // oriented so that delta > 0 means SSL performed better
  bool valid = true;
};

struct XvalResult {
  std::vector<XvalCell> cells;  // cell (fold, l_index) at fold * |grid| + l_index
  std::vector<XvalCurves> curves;
  bool loss = false;
};

namespace detail {

struct RankerSeeds {
  std::uint64_t ensemble, rf, relief;
};

inline FeatureRanking rank_once(const Dataset& train, const XvalConfig& cfg,
                                double supervision, const ReliefParams& relief,
                                const RankerSeeds& seeds) {
  switch (cfg.method) {
    case RankMethod::Symbolic:
    case RankMethod::Genie3:
    case RankMethod::Rf: {
      EnsembleParams ep = cfg.ensemble;
      ep.seed = seeds.ensemble;
      PctParams pp = cfg.pct;
      pp.supervision = supervision;
      const auto e = grow_ensemble(train, ep, pp);
      if (cfg.method == RankMethod::Symbolic)
        return symbolic_score(e, train.feature_count());
      if (cfg.method == RankMethod::Genie3)
        return genie3_score(e, train.feature_count());
      return rf_score(e, train, seeds.rf);
    }
    case RankMethod::Relief: {
      ReliefParams rp = relief;
      rp.seed = seeds.relief;
      return ssl_relief(train, rp);
    }
    case RankMethod::Laplace:
      return laplace_score(train, cfg.laplace);
  }
  throw std::logic_error("unreachable");
}

/// Internal cross-validation score of one hyper-parameter candidate on the
/// (already masked) training data: average metric of the ranking-weighted
/// kNN over the internal folds, weighted by labeled test size. The kNN
/// neighbor count is clamped to the labeled size of the internal training
/// part.
inline std::optional<double> internal_cv_score(
    const Dataset& train, const XvalConfig& cfg, double supervision,
    const ReliefParams& relief, std::uint64_t cell_seed,
    const std::vector<std::vector<int>>& internal_folds) {
  double weighted = 0.0, weight = 0.0;
  for (std::size_t f = 0; f < internal_folds.size(); ++f) {
    std::vector<int> train_rows;
    for (std::size_t j = 0; j < internal_folds.size(); ++j)
      if (j != f)
        train_rows.insert(train_rows.end(), internal_folds[j].begin(),
                          internal_folds[j].end());
    const auto itrain = subset_rows(train, train_rows);
    const auto itest = subset_rows(train, internal_folds[f]);
    const std::size_t itest_labeled = itest.labeled_count();
    const std::size_t itrain_labeled = itrain.labeled_count();
    if (itest_labeled == 0 || itrain_labeled == 0) continue;
    if (cfg.method == RankMethod::Relief && itrain.size() < relief.k + 1)
      return std::nullopt;  // candidate k infeasible on this data
    RankerSeeds seeds{mix_seed(cell_seed, 400, f), mix_seed(cell_seed, 401, f),
                      mix_seed(cell_seed, 402, f)};
    FeatureRanking r;
    try {
      r = rank_once(itrain, cfg, supervision, relief, seeds);
    } catch (const std::exception&) {
      continue;  // degenerate internal split; other folds still count
    }
    const std::size_t k_eval = std::min<std::size_t>(20, itrain_labeled);
    const auto m = evaluate_ranking(itrain, itest, k_eval, r.scores);
    if (!m.valid) continue;
    weighted += static_cast<double>(itest_labeled) * m.value;
    weight += static_cast<double>(itest_labeled);
  }
  if (weight == 0.0) return std::nullopt;
  return weighted / weight;
}

}  // namespace detail

/// The full label-masked cross-validation protocol: for every (fold, L)
/// cell, the SSL ranking is computed on the masked training data and the
/// supervised ranking on its labeled subset, both are scored by kNN on the
/// untouched test fold, and the per-L fold scores are averaged weighted by
/// test size. In grid mode the supervision level w (or the Relief
/// (w0, w1, k) triple) is selected per cell by internal cross-validation
/// over the training part. Cells are pure functions of (dataset, config),
/// so parallel and serial runs produce identical results.
inline XvalResult run_xval(const Dataset& d, const XvalConfig& cfg) {
  if (cfg.l_grid.empty()) throw std::invalid_argument("run_xval: empty L grid");
  if (cfg.knn_ks.empty()) throw std::invalid_argument("run_xval: no kNN k values");
  const auto plan = make_folds(d, cfg.x, cfg.l_grid, cfg.seed);

  XvalResult result;
  result.loss = loss_oriented(d.targets.task);
  const double orient = result.loss ? -1.0 : 1.0;
  result.cells.resize(cfg.x * cfg.l_grid.size());

  auto compute_cell = [&](std::size_t fold, std::size_t li) {
    XvalCell cell;
    cell.fold = fold;
    cell.l_index = li;
    const std::uint64_t cell_seed = mix_seed(cfg.seed, fold, li);

    const auto train_rows = plan.train_rows(fold);
    std::vector<int> labeled_pos;
    {
      std::vector<int> pos_of(d.size(), -1);
      for (std::size_t p = 0; p < train_rows.size(); ++p)
        pos_of[train_rows[p]] = static_cast<int>(p);
      for (int row : plan.train_labeled[fold][li]) labeled_pos.push_back(pos_of[row]);
    }
    const auto train_full = subset_rows(d, train_rows);
    const auto train_ssl = mask_to_rows(train_full, labeled_pos);
    const auto test = subset_rows(d, plan.folds[fold]);
    cell.test_size = test.size();

    double w_ssl = cfg.pct.supervision;
    ReliefParams relief_ssl = cfg.relief;
    if (cfg.grid_search &&
        (cfg.method == RankMethod::Symbolic || cfg.method == RankMethod::Genie3 ||
         cfg.method == RankMethod::Rf || cfg.method == RankMethod::Relief)) {
      // seeded internal partition of the training rows
      std::vector<int> order(train_ssl.size());
      std::iota(order.begin(), order.end(), 0);
      auto rng = make_rng(mix_seed(cell_seed, 300));
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<std::vector<int>> internal(cfg.internal_folds);
      const std::size_t base = order.size() / cfg.internal_folds;
      const std::size_t extra = order.size() % cfg.internal_folds;
      std::size_t at = 0;
      for (std::size_t j = 0; j < cfg.internal_folds; ++j) {
        const std::size_t len = base + (j < extra ? 1 : 0);
        internal[j].assign(order.begin() + at, order.begin() + at + len);
        at += len;
      }
      double best = -std::numeric_limits<double>::infinity();
      if (cfg.method == RankMethod::Relief) {
        for (double w0 : cfg.relief_w_grid)
          for (double w1 : cfg.relief_w_grid) {
            if (w0 > w1) continue;
            for (std::size_t k : cfg.relief_k_grid) {
              ReliefParams rp = cfg.relief;
              rp.w0 = w0;
              rp.w1 = w1;
              rp.k = k;
              const auto score = detail::internal_cv_score(
                  train_ssl, cfg, w_ssl, rp, cell_seed, internal);
              if (score && orient * *score > best) {
                best = orient * *score;
                relief_ssl = rp;
                cell.selected_w0 = w0;
                cell.selected_w1 = w1;
                cell.selected_k = k;
              }
            }
          }
      } else {
        for (double w : cfg.w_grid) {
          const auto score = detail::internal_cv_score(
              train_ssl, cfg, w, cfg.relief, cell_seed, internal);
          if (score && orient * *score > best) {
            best = orient * *score;
            w_ssl = w;
            cell.selected_w = w;
          }
        }
      }
    }

    detail::RankerSeeds ssl_seeds{mix_seed(cell_seed, 101), mix_seed(cell_seed, 102),
                                  mix_seed(cell_seed, 103)};
    cell.ssl_ranking =
        detail::rank_once(train_ssl, cfg, w_ssl, relief_ssl, ssl_seeds);

    // Supervised counterpart: unlabeled examples removed, full supervision.
    const auto train_sl = remove_unlabeled(train_ssl);
    detail::RankerSeeds sl_seeds{mix_seed(cell_seed, 201), mix_seed(cell_seed, 202),
                                 mix_seed(cell_seed, 203)};
    ReliefParams relief_sl = relief_ssl;
    cell.sl_ranking = detail::rank_once(train_sl, cfg, 1.0, relief_sl, sl_seeds);

    for (std::size_t k : cfg.knn_ks) {
      cell.ssl_perf.push_back(
          evaluate_ranking(train_ssl, test, k, cell.ssl_ranking.scores));
      cell.sl_perf.push_back(
          evaluate_ranking(train_ssl, test, k, cell.sl_ranking.scores));
    }
    result.cells[fold * cfg.l_grid.size() + li] = std::move(cell);
  };

  const std::size_t n_cells = cfg.x * cfg.l_grid.size();
  if (cfg.jobs <= 1) {
    for (std::size_t c = 0; c < n_cells; ++c)
      compute_cell(c / cfg.l_grid.size(), c % cfg.l_grid.size());
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_cells) return;
        compute_cell(c / cfg.l_grid.size(), c % cfg.l_grid.size());
      }
    };
    std::vector<std::future<void>> pool;
    for (std::size_t j = 0; j < cfg.jobs; ++j)
      pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
  }

  // Fold scores averaged per L, weighted by test size (Sec. 6.5 reading).
  for (std::size_t ki = 0; ki < cfg.knn_ks.size(); ++ki) {
    XvalCurves curves;
    curves.k = cfg.knn_ks[ki];
    std::vector<std::pair<double, double>> ssl_points, sl_points;
    for (std::size_t li = 0; li < cfg.l_grid.size(); ++li) {
      double ssl_sum = 0.0, sl_sum = 0.0, weight = 0.0;
      for (std::size_t fold = 0; fold < cfg.x; ++fold) {
        const auto& cell = result.cells[fold * cfg.l_grid.size() + li];
        const double w = static_cast<double>(cell.test_size);
        curves.valid &= cell.ssl_perf[ki].valid && cell.sl_perf[ki].valid;
        ssl_sum += w * cell.ssl_perf[ki].value;
        sl_sum += w * cell.sl_perf[ki].value;
        weight += w;
      }
      ssl_points.emplace_back(static_cast<double>(cfg.l_grid[li]), ssl_sum / weight);
      sl_points.emplace_back(static_cast<double>(cfg.l_grid[li]), sl_sum / weight);
    }
    if (ssl_points.size() >= 2) {
      curves.ssl = curve_and_area(ssl_points);
      curves.sl = curve_and_area(sl_points);
    } else {
      curves.ssl.points = ssl_points;
      curves.ssl.area = ssl_points.front().second;
      curves.sl.points = sl_points;
      curves.sl.area = sl_points.front().second;
    }
    curves.delta = orient * (curves.ssl.area - curves.sl.area);
    result.curves.push_back(std::move(curves));
  }
  return result;
}

/// Directory layout: <outdir>/<method>/<L>/fold<j>_{ssl,sl}.csv ranking
/// files, plus <outdir>/<method>/curves.csv (method, variant, k, L,
/// performance) and <outdir>/<method>/summary.json with areas and deltas.
inline void write_xval_outputs(const XvalResult& result, const Dataset& d,
                               const XvalConfig& cfg, const std::string& outdir) {
  namespace fs = std::filesystem;
  const std::string method = rank_method_name(cfg.method);
  const fs::path root = fs::path(outdir) / method;
  fs::create_directories(root);

  for (const auto& cell : result.cells) {
    const fs::path dir = root / std::to_string(cfg.l_grid[cell.l_index]);
    fs::create_directories(dir);
    const std::string stem = "fold" + std::to_string(cell.fold);
    write_ranking_csv(cell.ssl_ranking, d, (dir / (stem + "_ssl.csv")).string());
    write_ranking_csv(cell.sl_ranking, d, (dir / (stem + "_sl.csv")).string());
  }

  {
    std::ofstream out(root / "curves.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write curves.csv");
    csv::write_row(out, {"method", "variant", "k", "L", "performance"});
    for (const auto& c : result.curves) {
      for (const auto& [l, perf] : c.ssl.points)
        csv::write_row(out, {method, "ssl", std::to_string(c.k),
                             csv::format_double(l), csv::format_double(perf)});
      for (const auto& [l, perf] : c.sl.points)
        csv::write_row(out, {method, "sl", std::to_string(c.k),
                             csv::format_double(l), csv::format_double(perf)});
    }
  }

  nlohmann::json summary;
  summary["method"] = method;
  summary["task"] = task_name(d.targets.task);
  summary["loss_oriented"] = result.loss;
  summary["x"] = cfg.x;
  summary["seed"] = cfg.seed;
  summary["l_grid"] = cfg.l_grid;
  auto& curves = summary["curves"] = nlohmann::json::array();
  for (const auto& c : result.curves) {
    nlohmann::json entry;
    entry["k"] = c.k;
    entry["area_ssl"] = c.ssl.area;
    entry["area_sl"] = c.sl.area;
    entry["delta"] = c.delta;
    entry["valid"] = c.valid;
    curves.push_back(entry);
  }
  if (cfg.grid_search) {
    auto& cells = summary["selected"] = nlohmann::json::array();
    for (const auto& cell : result.cells) {
      nlohmann::json entry;
      entry["fold"] = cell.fold;
      entry["L"] = cfg.l_grid[cell.l_index];
      if (!std::isnan(cell.selected_w)) entry["w"] = cell.selected_w;
      if (!std::isnan(cell.selected_w0)) {
        entry["w0"] = cell.selected_w0;
        entry["w1"] = cell.selected_w1;
        entry["k"] = cell.selected_k;
      }
      cells.push_back(entry);
    }
  }
  std::ofstream out(root / "summary.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary.json");
  out << summary.dump(2) << '\n';
}

}  // namespace sslrank

#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslrank/csv.hpp"
#include "sslrank/dataset.hpp"

namespace sslrank {

/// Per-feature importance scores. Symbolic and Genie3 scores are
/// non-negative; Random Forest and Relief scores may be negative.
struct FeatureRanking {
  std::vector<double> scores;
  std::string method;
  bool degenerate = false;  // numeric degeneracy produced an all-zero ranking
};

/// Feature indices in ranking order: descending score, ties by index.
inline std::vector<int> ranking_order(const FeatureRanking& r) {
  std::vector<int> order(r.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return r.scores[a] > r.scores[b];
  });
  return order;
}

/// Ranking file: one CSV row per feature with name, score and 1-based rank.
inline void write_ranking_csv(const FeatureRanking& r, const Dataset& d,
                              const std::string& path) {
  if (r.scores.size() != d.feature_count())
    throw std::invalid_argument("ranking size does not match dataset");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  csv::write_row(out, {"feature", "score", "rank"});
  const auto order = ranking_order(r);
  std::vector<int> rank_of(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank_of[order[pos]] = static_cast<int>(pos) + 1;
  for (std::size_t i = 0; i < r.scores.size(); ++i)
    csv::write_row(out, {d.features[i].name, csv::format_double(r.scores[i]),
                         std::to_string(rank_of[i])});
}

inline FeatureRanking read_ranking_csv(const std::string& path) {
  auto rows = csv::parse_file(path);
  if (rows.size() < 2) throw std::runtime_error("ranking file is empty: " + path);
  FeatureRanking r;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() < 2) throw std::runtime_error("ranking row too short");
    r.scores.push_back(csv::parse_double(rows[i][1]));
  }
  return r;
}

inline void write_ranking_metadata(const nlohmann::json& meta,
                                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << meta.dump(2) << '\n';
}

}  // namespace sslrank

#pragma once

// Synthetic dataset builders for the test suites.

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sslrank/dataset.hpp"

namespace test_support {

inline sslrank::Column numeric_column(std::string name, std::vector<double> values) {
  sslrank::Column c;
  c.name = std::move(name);
  c.kind = sslrank::FeatureKind::Numeric;
  c.numeric = std::move(values);
  return c;
}

inline sslrank::Column nominal_column(std::string name, std::vector<int> codes,
                                      std::vector<std::string> categories) {
  sslrank::Column c;
  c.name = std::move(name);
  c.kind = sslrank::FeatureKind::Nominal;
  c.codes = std::move(codes);
  c.categories = std::move(categories);
  return c;
}

inline sslrank::Dataset make_classification(
    std::vector<sslrank::Column> features, std::vector<int> labels,
    std::vector<std::string> classes) {
  sslrank::Dataset d;
  d.n_examples = labels.size();
  d.features = std::move(features);
  d.targets.task = sslrank::Task::Classification;
  d.targets.columns.push_back(
      nominal_column("y", std::move(labels), std::move(classes)));
  d.targets.labeled.assign(d.n_examples, 1);
  d.finalize();
  return d;
}

inline sslrank::Dataset make_regression(std::vector<sslrank::Column> features,
                                        std::vector<std::vector<double>> targets) {
  sslrank::Dataset d;
  d.n_examples = targets.front().size();
  d.features = std::move(features);
  d.targets.task = targets.size() == 1 ? sslrank::Task::Str : sslrank::Task::Mtr;
  for (std::size_t j = 0; j < targets.size(); ++j)
    d.targets.columns.push_back(
        numeric_column("y" + std::to_string(j + 1), std::move(targets[j])));
  d.targets.labeled.assign(d.n_examples, 1);
  d.finalize();
  return d;
}

inline sslrank::Dataset make_mlc(std::vector<sslrank::Column> features,
                                 std::vector<std::vector<double>> label_columns) {
  sslrank::Dataset d;
  d.n_examples = label_columns.front().size();
  d.features = std::move(features);
  d.targets.task = sslrank::Task::Mlc;
  for (std::size_t j = 0; j < label_columns.size(); ++j)
    d.targets.columns.push_back(
        numeric_column("l" + std::to_string(j + 1), std::move(label_columns[j])));
  d.targets.labeled.assign(d.n_examples, 1);
  d.finalize();
  return d;
}

inline sslrank::Dataset make_hmlc(std::vector<sslrank::Column> features,
                                  std::vector<std::vector<double>> label_columns,
                                  std::vector<std::pair<int, int>> parent_edges,
                                  double alpha) {
  sslrank::Dataset d;
  d.n_examples = label_columns.front().size();
  d.features = std::move(features);
  d.targets.task = sslrank::Task::Hmlc;
  sslrank::Hierarchy h;
  for (std::size_t j = 0; j < label_columns.size(); ++j) {
    const std::string name = "l" + std::to_string(j + 1);
    h.labels.push_back(name);
    d.targets.columns.push_back(numeric_column(name, std::move(label_columns[j])));
  }
  h.parents.assign(h.labels.size(), {});
  for (auto [parent, child] : parent_edges) h.parents[child].push_back(parent);
  h.alpha = alpha;
  h.weights = sslrank::hierarchy_weights(h);
  d.targets.hierarchy = std::move(h);
  d.targets.labeled.assign(d.n_examples, 1);
  d.finalize();
  return d;
}

/// Uniform-feature classification data where the class is the sign of the
/// first feature; remaining features are noise.
inline sslrank::Dataset informative_first_feature(std::size_t m, std::size_t d,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<sslrank::Column> features;
  std::vector<int> labels(m);
  std::vector<double> x1(m);
  for (std::size_t i = 0; i < m; ++i) {
    x1[i] = u(rng);
    labels[i] = x1[i] > 0.5 ? 1 : 0;
  }
  features.push_back(numeric_column("x1", std::move(x1)));
  for (std::size_t f = 1; f < d; ++f) {
    std::vector<double> col(m);
    for (auto& v : col) v = u(rng);
    features.push_back(numeric_column("x" + std::to_string(f + 1), std::move(col)));
  }
  return make_classification(std::move(features), std::move(labels), {"neg", "pos"});
}

/// STR data satisfying the clustering hypothesis: two Gaussian clusters in
/// the first two features determine the target mean; the rest is noise.
/// `gap` is the between-cluster target difference, `label_noise` the
/// within-cluster target spread and `cluster_sigma` the cluster width.
inline sslrank::Dataset clustered_str(std::size_t m, std::size_t d,
                                      std::uint64_t seed, double gap = 10.0,
                                      double label_noise = 0.1,
                                      double cluster_sigma = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> cols(d, std::vector<double>(m));
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool upper = i % 2 == 0;
    cols[0][i] = (upper ? 1.0 : -1.0) + cluster_sigma * g(rng);
    cols[1][i] = (upper ? 1.0 : -1.0) + cluster_sigma * g(rng);
    y[i] = (upper ? gap / 2 : -gap / 2) + label_noise * g(rng);
    for (std::size_t f = 2; f < d; ++f) cols[f][i] = u(rng);
  }
  std::vector<sslrank::Column> features;
  for (std::size_t f = 0; f < d; ++f)
    features.push_back(
        numeric_column("x" + std::to_string(f + 1), std::move(cols[f])));
  return make_regression(std::move(features), {std::move(y)});
}

/// Three well-separated Gaussian blobs with the blob index as the class.
inline sslrank::Dataset gaussian_blobs(std::size_t per_blob, double separation,
                                       double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  const double centers[3][2] = {
      {0.0, 0.0}, {separation, 0.0}, {0.0, separation}};
  std::vector<double> x(per_blob * 3), y(per_blob * 3);
  std::vector<int> labels(per_blob * 3);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < per_blob; ++i) {
      const std::size_t at = b * per_blob + i;
      x[at] = centers[b][0] + g(rng);
      y[at] = centers[b][1] + g(rng);
      labels[at] = static_cast<int>(b);
    }
  return make_classification(
      {numeric_column("x1", std::move(x)), numeric_column("x2", std::move(y))},
      std::move(labels), {"a", "b", "c"});
}

}  // namespace test_support

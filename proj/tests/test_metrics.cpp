#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "sslrank/metrics.hpp"

using namespace sslrank;

TEST_CASE("f1_macro") {
  SECTION("perfect predictions score 1") {
    CHECK(f1_macro({0, 1, 0, 1}, {0, 1, 0, 1}, 2) == 1.0);
  }
  SECTION("single-class predictor on balanced binary truth") {
    // predicted class: p = 0.5, r = 1 -> F1 = 2/3; other class: F1 = 0
    const double v = f1_macro({0, 0, 0, 0}, {0, 0, 1, 1}, 2);
    CHECK(v == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SECTION("class absent from truth and predictions is skipped") {
    const double with_ghost = f1_macro({0, 1}, {0, 1}, 3);
    CHECK(with_ghost == 1.0);
  }
}

TEST_CASE("rrmse") {
  SECTION("test-mean predictor scores exactly 1") {
    std::vector<std::vector<double>> truth;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double mean = 0.0;
    for (int i = 0; i < 50; ++i) {
      truth.push_back({u(rng)});
      mean += truth.back()[0];
    }
    mean /= 50.0;
    std::vector<std::vector<double>> preds(50, {mean});
    const auto r = rrmse(preds, truth);
    CHECK(r.valid);
    CHECK(r.value == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("perfect predictions score 0") {
    std::vector<std::vector<double>> truth{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(rrmse(truth, truth).value == 0.0);
  }
  SECTION("one perfect target and one mean-predicting target averages 0.5") {
    std::vector<std::vector<double>> truth{{1.0, 0.0}, {3.0, 2.0}};
    std::vector<std::vector<double>> preds{{1.0, 1.0}, {3.0, 1.0}};
    CHECK(rrmse(preds, truth).value == Catch::Approx(0.5).margin(1e-12));
  }
  SECTION("constant target flags invalid unless predicted exactly") {
    std::vector<std::vector<double>> truth{{2.0}, {2.0}};
    CHECK(rrmse({{2.0}, {2.0}}, truth).valid);
    CHECK_FALSE(rrmse({{2.0}, {2.5}}, truth).valid);
  }
}

namespace {

// Brute-force AUPRC: enumerate every distinct score as a threshold and sum
// the stepwise area directly from counted tp/fp at each threshold.
double auprc_brute_force(const std::vector<std::vector<double>>& scores,
                         const std::vector<std::vector<double>>& truth) {
  std::vector<double> flat_scores;
  std::vector<int> flat_truth;
  long positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores[i].size(); ++j) {
      flat_scores.push_back(scores[i][j]);
      flat_truth.push_back(truth[i][j] != 0.0 ? 1 : 0);
      positives += flat_truth.back();
    }
  std::vector<double> thresholds = flat_scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  double area = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < flat_scores.size(); ++i) {
      if (flat_scores[i] >= t) {
        if (flat_truth[i])
          ++tp;
        else
          ++fp;
      }
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace

TEST_CASE("auprc_micro") {
  SECTION("perfectly separated scores give area 1") {
    std::vector<std::vector<double>> truth{{1, 0}, {1, 0}, {0, 1}};
    std::vector<std::vector<double>> scores{{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}};
    CHECK(auprc_micro(scores, truth) == Catch::Approx(1.0));
  }
  SECTION("constant scores give area equal to prevalence") {
    std::vector<std::vector<double>> truth{{1, 0}, {0, 0}};
    std::vector<std::vector<double>> scores{{0.5, 0.5}, {0.5, 0.5}};
    CHECK(auprc_micro(scores, truth) == Catch::Approx(0.25));
  }
  SECTION("inverted perfect scores match the brute-force oracle") {
    std::vector<std::vector<double>> truth{{1, 1, 0}, {0, 0, 1}};
    std::vector<std::vector<double>> scores{{0.1, 0.2, 0.9}, {0.8, 0.7, 0.3}};
    CHECK(auprc_micro(scores, truth) == auprc_brute_force(scores, truth));
  }
  SECTION("matches brute force exactly on random small instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t rows = 1 + rng() % 5;
      const std::size_t labels = 1 + rng() % (10 / rows);
      std::vector<std::vector<double>> scores(rows), truth(rows);
      bool any = false;
      for (auto& r : truth) {
        r.resize(labels);
        for (auto& v : r) {
          v = rng() % 2 ? 1.0 : 0.0;
          any |= v == 1.0;
        }
      }
      if (!any) truth[0][0] = 1.0;
      for (auto& r : scores) {
        r.resize(labels);
        // coarse grid of score values forces plenty of threshold ties
        for (auto& v : r) v = static_cast<double>(rng() % 4) / 4.0;
      }
      CHECK(auprc_micro(scores, truth) == auprc_brute_force(scores, truth));
    }
  }
  SECTION("no relevant pairs is an error") {
    std::vector<std::vector<double>> truth{{0, 0}};
    std::vector<std::vector<double>> scores{{0.5, 0.6}};
    CHECK_THROWS_AS(auprc_micro(scores, truth), std::invalid_argument);
  }
}

namespace {

// Independent ARI route: raw pair counts instead of the contingency table.
double ari_pair_counting(const std::vector<int>& a, const std::vector<int>& b) {
  double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool same_a = a[i] == a[j], same_b = b[i] == b[j];
      n11 += same_a && same_b;
      n00 += !same_a && !same_b;
      n10 += same_a && !same_b;
      n01 += !same_a && same_b;
    }
  const double denom = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
  if (denom == 0.0) return 1.0;
  return 2.0 * (n11 * n00 - n10 * n01) / denom;
}

}  // namespace

TEST_CASE("ari") {
  SECTION("identical partitions score 1") {
    CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
  }
  SECTION("relabeling either partition keeps the value") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 4 + rng() % 20;
      std::vector<int> a(n), b(n);
      for (auto& v : a) v = static_cast<int>(rng() % 4);
      for (auto& v : b) v = static_cast<int>(rng() % 3);
      const double base = ari(a, b);
      std::vector<int> relabeled(a);
      const int remap[4] = {2, 3, 1, 0};
      for (auto& v : relabeled) v = remap[v];
      CHECK(ari(relabeled, b) == Catch::Approx(base).margin(1e-12));
      CHECK(ari(a, b) == Catch::Approx(ari(b, a)).margin(1e-12));
    }
  }
  SECTION("all singletons vs one cluster matches the pair-counting oracle") {
    const std::vector<int> singletons{0, 1, 2, 3}, lumped{0, 0, 0, 0};
    CHECK(ari(singletons, lumped) ==
          Catch::Approx(ari_pair_counting(singletons, lumped)).margin(1e-12));
  }
  SECTION("matches the pair-counting oracle on random partitions") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 3 + rng() % 15;
      std::vector<int> a(n), b(n);
      for (auto& v : a) v = static_cast<int>(rng() % 3);
      for (auto& v : b) v = static_cast<int>(rng() % 5);
      CHECK(ari(a, b) == Catch::Approx(ari_pair_counting(a, b)).margin(1e-12));
    }
  }
}

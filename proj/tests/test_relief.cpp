#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sslrank/distances.hpp"
#include "sslrank/relief.hpp"
#include "support/relief_reference.hpp"
#include "support/synthetic.hpp"

using namespace sslrank;
using test_support::make_classification;
using test_support::make_hmlc;
using test_support::make_mlc;
using test_support::make_regression;
using test_support::nominal_column;
using test_support::numeric_column;

TEST_CASE("descriptive_distance") {
  SECTION("identical vectors are at distance 0") {
    auto d = make_classification(
        {numeric_column("x1", {1, 1}), nominal_column("x2", {0, 0}, {"A", "B"})},
        {0, 1}, {"n", "y"});
    CHECK(descriptive_distance(d, 0, 1) == 0.0);
  }
  SECTION("all-nominal vectors differing everywhere are at distance 1") {
    auto d = make_classification(
        {nominal_column("x1", {0, 1}, {"A", "B"}),
         nominal_column("x2", {1, 0}, {"A", "B"})},
        {0, 1}, {"n", "y"});
    CHECK(descriptive_distance(d, 0, 1) == 1.0);
  }
  SECTION("mixed pair averages to 0.25") {
    // nominal equal; numeric |3-1| over range 5-1 = 4
    auto d = make_classification(
        {nominal_column("x1", {0, 0, 0}, {"A", "B"}),
         numeric_column("x2", {1, 3, 5})},
        {0, 1, 0}, {"n", "y"});
    CHECK(descriptive_distance(d, 0, 1) == Catch::Approx(0.25).margin(1e-15));
  }
  SECTION("zero-range numeric features contribute 0") {
    auto d = make_classification({numeric_column("x1", {2, 2})}, {0, 1},
                                 {"n", "y"});
    CHECK(descriptive_distance(d, 0, 1) == 0.0);
  }
}

TEST_CASE("target_distance") {
  SECTION("classification indicator") {
    auto d = make_classification({numeric_column("x1", {0, 0, 0})}, {0, 0, 1},
                                 {"a", "b"});
    CHECK(target_distance(d, 0, 1) == 0.0);
    CHECK(target_distance(d, 0, 2) == 1.0);
  }
  SECTION("MLC Hamming distance over four labels") {
    auto d = make_mlc({numeric_column("x1", {0, 0})},
                      {{1, 0}, {0, 1}, {0, 0}, {0, 0}});  // {l1} vs {l2}
    CHECK(target_distance(d, 0, 1) == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("HMLC weighted Hamming distance") {
    // chain l1 -> l2 with alpha 0.75: weights 1, 0.75
    auto d = make_hmlc({numeric_column("x1", {0, 0})}, {{1, 1}, {0, 1}},
                       {{0, 1}}, 0.75);
    CHECK(target_distance(d, 0, 1) ==
          Catch::Approx(0.75 / 1.75).epsilon(1e-12));
  }
  SECTION("STR range normalization over labeled examples") {
    auto d = make_regression({numeric_column("x1", {0, 0, 0})}, {{1, 3, 5}});
    CHECK(target_distance(d, 0, 1) == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("unlabeled input is rejected") {
    auto d = make_classification({numeric_column("x1", {0, 0})}, {0, 1},
                                 {"a", "b"});
    auto masked = mask_to_rows(d, {0});
    CHECK_THROWS_AS(target_distance(masked, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("instance_influence") {
  SECTION("fully labeled data gets weight 1 everywhere") {
    auto d = test_support::informative_first_feature(20, 2, 3);
    const auto w = instance_influence(d, 0.2, 0.8);
    for (double v : w) CHECK(v == 1.0);
  }
  SECTION("nearest unlabeled maps to w1, farthest to w0") {
    // labeled point at 0; unlabeled at 1 (near) and 10 (far)
    auto d = make_regression({numeric_column("x1", {0, 1, 10})}, {{5, 6, 7}});
    auto masked = mask_to_rows(d, {0});
    const auto w = instance_influence(masked, 0.25, 0.75);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.75);
    CHECK(w[2] == 0.25);
  }
  SECTION("degenerate interval [1,1] gives weight 1 regardless of distance") {
    auto d = make_regression({numeric_column("x1", {0, 1, 10})}, {{5, 6, 7}});
    auto masked = mask_to_rows(d, {0});
    const auto w = instance_influence(masked, 1.0, 1.0);
    for (double v : w) CHECK(v == 1.0);
  }
  SECTION("equidistant unlabeled examples get the midpoint weight") {
    auto d = make_regression({numeric_column("x1", {0, 2, -2})}, {{5, 6, 7}});
    auto masked = mask_to_rows(d, {0});
    const auto w = instance_influence(masked, 0.2, 0.6);
    CHECK(w[1] == Catch::Approx(0.4));
    CHECK(w[2] == Catch::Approx(0.4));
  }
  SECTION("no labeled example is an error") {
    auto d = make_regression({numeric_column("x1", {0, 1})}, {{5, 6}});
    auto masked = mask_labels(d, 0, 1);
    CHECK_THROWS_AS(instance_influence(masked, 0.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("ssl_relief equals the supervised reference on full labels") {
  ReliefParams p;
  p.k = 10;
  p.m = 150;
  p.w0 = 1.0;
  p.w1 = 1.0;
  p.seed = 424242;
  SECTION("classification") {
    const auto d = test_support::informative_first_feature(150, 5, 8);
    const auto ours = ssl_relief(d, p);
    const auto reference =
        test_support::supervised_relief_reference(d, p.m, p.k, p.seed);
    for (std::size_t f = 0; f < 5; ++f)
      CHECK(ours.scores[f] == Catch::Approx(reference[f]).margin(1e-12));
  }
  SECTION("STR") {
    const auto d = test_support::clustered_str(150, 5, 9);
    const auto ours = ssl_relief(d, p);
    const auto reference =
        test_support::supervised_relief_reference(d, p.m, p.k, p.seed);
    for (std::size_t f = 0; f < 5; ++f)
      CHECK(ours.scores[f] == Catch::Approx(reference[f]).margin(1e-12));
  }
}

TEST_CASE("ssl_relief properties") {
  SECTION("constant features score exactly 0") {
    auto d = test_support::informative_first_feature(60, 2, 12);
    Dataset with_const = d;
    with_const.features.push_back(
        numeric_column("flat", std::vector<double>(60, 3.0)));
    with_const.finalize();
    ReliefParams p;
    p.k = 5;
    p.seed = 3;
    const auto r = ssl_relief(with_const, p);
    CHECK(r.scores[2] == 0.0);
  }
  SECTION("importances stay within [-1, 1]") {
    std::mt19937_64 seeds(5);
    for (int trial = 0; trial < 5; ++trial) {
      auto full = test_support::informative_first_feature(80, 4, seeds());
      auto d = mask_labels(full, 30 + seeds() % 50, seeds());
      ReliefParams p;
      p.k = 7;
      p.w0 = 0.25;
      p.w1 = 0.75;
      p.seed = seeds();
      const auto r = ssl_relief(d, p);
      for (double v : r.scores) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SECTION("neighbor sets ignore the labels") {
    auto full = test_support::informative_first_feature(50, 3, 21);
    auto masked = mask_labels(full, 20, 77);  // different labels, same features
    for (std::size_t r = 0; r < 50; r += 7)
      CHECK(descriptive_knn(full, r, 8) == descriptive_knn(masked, r, 8));
  }
  SECTION("monotone rescaling of a numeric feature changes nothing") {
    auto full = test_support::informative_first_feature(80, 3, 31);
    auto d = mask_labels(full, 50, 5);
    Dataset scaled = d;
    for (auto& v : scaled.features[1].numeric) v = 100.0 * v + 7.0;
    scaled.finalize();
    ReliefParams p;
    p.k = 9;
    p.w0 = 0.5;
    p.w1 = 1.0;
    p.seed = 17;
    const auto a = ssl_relief(d, p);
    const auto b = ssl_relief(scaled, p);
    for (std::size_t f = 0; f < 3; ++f)
      CHECK(a.scores[f] == Catch::Approx(b.scores[f]).margin(1e-12));
  }
  SECTION("constant targets degrade to a flagged zero ranking") {
    auto d = make_regression(
        {numeric_column("x1", {1, 2, 3, 4, 5})}, {{2, 2, 2, 2, 2}});
    ReliefParams p;
    p.k = 2;
    p.seed = 1;
    const auto r = ssl_relief(d, p);
    CHECK(r.degenerate);
    CHECK(r.scores == std::vector<double>{0.0});
  }
  SECTION("informative feature beats noise") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto full = test_support::informative_first_feature(200, 2, seed);
      auto d = mask_labels(full, 100, seed + 100);
      ReliefParams p;
      p.k = 15;
      p.w0 = 0.5;
      p.w1 = 1.0;
      p.seed = seed;
      const auto r = ssl_relief(d, p);
      wins += r.scores[0] > r.scores[1];
    }
    CHECK(wins >= 4);
  }
  SECTION("preconditions") {
    auto d = test_support::informative_first_feature(10, 2, 2);
    ReliefParams p;
    p.k = 10;  // needs k+1 examples
    CHECK_THROWS_AS(ssl_relief(d, p), std::invalid_argument);
  }
}

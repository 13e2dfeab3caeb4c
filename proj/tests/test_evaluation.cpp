#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "sslrank/evaluation.hpp"
#include "support/synthetic.hpp"

using namespace sslrank;
using test_support::make_classification;
using test_support::make_regression;
using test_support::numeric_column;

TEST_CASE("make_folds allocation") {
  const auto d = test_support::informative_first_feature(1000, 2, 51);
  SECTION("every training set holds exactly L labeled examples, nested") {
    const std::vector<std::size_t> grid{50, 100, 200, 350, 500};
    const auto plan = make_folds(d, 10, grid, 99);
    // folds partition the examples
    std::set<int> seen;
    for (const auto& fold : plan.folds)
      for (int r : fold) CHECK(seen.insert(r).second);
    CHECK(seen.size() == 1000);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t li = 0; li < grid.size(); ++li) {
        CHECK(plan.train_labeled[i][li].size() == grid[li]);
        if (li > 0) {
          std::set<int> smaller(plan.train_labeled[i][li - 1].begin(),
                                plan.train_labeled[i][li - 1].end());
          std::set<int> larger(plan.train_labeled[i][li].begin(),
                               plan.train_labeled[i][li].end());
          CHECK(std::includes(larger.begin(), larger.end(), smaller.begin(),
                              smaller.end()));
        }
        // labeled examples live outside the test fold
        std::set<int> test_rows(plan.folds[i].begin(), plan.folds[i].end());
        for (int r : plan.train_labeled[i][li]) CHECK(test_rows.count(r) == 0);
      }
    }
  }
  SECTION("x = 2 with L = M/2 keeps the whole contributing fold labeled") {
    const auto small = test_support::informative_first_feature(100, 2, 3);
    const auto plan = make_folds(small, 2, {50}, 1);
    CHECK(plan.train_labeled[0][0].size() == 50);
    std::set<int> fold1(plan.folds[1].begin(), plan.folds[1].end());
    for (int r : plan.train_labeled[0][0]) CHECK(fold1.count(r) == 1);
  }
  SECTION("infeasible L is rejected") {
    const auto small = test_support::informative_first_feature(30, 2, 3);
    CHECK_THROWS_AS(make_folds(small, 10, {50}, 1), std::invalid_argument);
  }
  SECTION("same seed reproduces the plan") {
    const auto a = make_folds(d, 5, {50, 100}, 7);
    const auto b = make_folds(d, 5, {50, 100}, 7);
    CHECK(a.folds == b.folds);
    CHECK(a.train_labeled == b.train_labeled);
  }
}

TEST_CASE("knn_predict") {
  auto train = make_classification(
      {numeric_column("x1", {0.0, 1.0, 0.1, 0.9}),
       numeric_column("x2", {0.0, 1.0, 0.1, 0.9})},
      {0, 1, 0, 1}, {"n", "y"});
  SECTION("k = 1 on a coincident point returns that point's target") {
    auto test = make_classification(
        {numeric_column("x1", {1.0}), numeric_column("x2", {1.0})}, {0},
        {"n", "y"});
    const auto pred = knn_predict(train, test, 1, {1.0, 1.0});
    CHECK(pred[0][0] == 1.0);
  }
  SECTION("all-nonpositive importances fall back to uniform weights") {
    auto test = make_classification(
        {numeric_column("x1", {0.2, 0.7}), numeric_column("x2", {0.3, 0.6})},
        {0, 0}, {"n", "y"});
    const auto uniform = knn_predict(train, test, 3, {1.0, 1.0});
    const auto fallback = knn_predict(train, test, 3, {-0.5, 0.0});
    CHECK(uniform == fallback);
  }
  SECTION("zero-weight features are ignored in the metric") {
    auto reg_train = make_regression(
        {numeric_column("x1", {0.0, 1.0}), numeric_column("x2", {0.0, 1.0})},
        {{10.0, 20.0}});
    auto reg_test = make_regression(
        {numeric_column("x1", {0.0}), numeric_column("x2", {1.0})}, {{0.0}});
    // weight (1, 0): the test point coincides with train row 0
    const auto pred = knn_predict(reg_train, reg_test, 1, {1.0, 0.0});
    CHECK(pred[0][0] == 10.0);
  }
  SECTION("fewer than k labeled training examples is an error") {
    CHECK_THROWS_AS(knn_predict(train, train, 5, {1.0, 1.0}),
                    std::invalid_argument);
  }
  SECTION("regression prediction averages the neighbors") {
    auto reg_train = make_regression(
        {numeric_column("x1", {0.0, 0.1, 5.0})}, {{1.0, 3.0, 100.0}});
    auto reg_test =
        make_regression({numeric_column("x1", {0.05})}, {{0.0}});
    const auto pred = knn_predict(reg_train, reg_test, 2, {1.0});
    CHECK(pred[0][0] == 2.0);
  }
}

TEST_CASE("curve_and_area") {
  SECTION("flat curve has its constant as area") {
    const auto c = curve_and_area({{50, 0.4}, {100, 0.4}, {500, 0.4}});
    CHECK(c.area == Catch::Approx(0.4).margin(1e-15));
  }
  SECTION("straight ramp from 0 to 1 has area 0.5") {
    const auto c = curve_and_area({{50, 0.0}, {500, 1.0}});
    CHECK(c.area == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("area is invariant under affine rescaling of L") {
    const std::vector<std::pair<double, double>> pts{
        {50, 0.2}, {100, 0.9}, {200, 0.5}, {350, 0.7}};
    std::vector<std::pair<double, double>> scaled;
    for (auto [l, p] : pts) scaled.emplace_back(3.0 * l + 20.0, p);
    CHECK(curve_and_area(pts).area ==
          Catch::Approx(curve_and_area(scaled).area).margin(1e-12));
  }
  SECTION("preconditions") {
    CHECK_THROWS_AS(curve_and_area({{50, 0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(curve_and_area({{50, 0.1}, {50, 0.2}}),
                    std::invalid_argument);
  }
}

TEST_CASE("kmeans") {
  SECTION("k = 1 puts everything into one cluster") {
    auto d = test_support::gaussian_blobs(10, 10.0, 0.5, 3);
    const auto enc = one_hot_encode(d);
    const auto assign = kmeans(enc, 1, 3, 1);
    for (int a : assign) CHECK(a == 0);
  }
  SECTION("two separated blobs are recovered") {
    auto d = test_support::gaussian_blobs(15, 50.0, 0.5, 5);
    // keep only blobs 0 and 1
    std::vector<int> rows;
    for (int i = 0; i < 30; ++i) rows.push_back(i);
    const auto two = subset_rows(d, rows);
    const auto enc = one_hot_encode(two);
    const auto assign = kmeans(enc, 2, 5, 7);
    for (int i = 1; i < 15; ++i) CHECK(assign[i] == assign[0]);
    for (int i = 16; i < 30; ++i) CHECK(assign[i] == assign[15]);
    CHECK(assign[0] != assign[15]);
  }
  SECTION("k = number of distinct points gives singleton clusters") {
    auto d = make_regression({numeric_column("x1", {1, 2, 3, 4})},
                             {{1, 1, 1, 1}});
    const auto enc = one_hot_encode(d);
    const auto assign = kmeans(enc, 4, 2, 11);
    std::set<int> unique(assign.begin(), assign.end());
    CHECK(unique.size() == 4);
  }
  SECTION("k above the number of distinct points is rejected") {
    auto d = make_regression({numeric_column("x1", {1, 1, 2})}, {{1, 1, 1}});
    const auto enc = one_hot_encode(d);
    CHECK_THROWS_AS(kmeans(enc, 3, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("ch_score") {
  SECTION("separated blobs have CH near 1; shuffled labels near 0") {
    auto d = test_support::gaussian_blobs(40, 30.0, 0.5, 13);
    CHECK(ch_score(d, 1) >= 0.95);
    Dataset shuffled = d;
    auto rng = make_rng(2);
    std::shuffle(shuffled.targets.columns[0].codes.begin(),
                 shuffled.targets.columns[0].codes.end(), rng);
    shuffled.finalize();
    const double ch = ch_score(shuffled, 1);
    CHECK(std::abs(ch) < 0.1);
  }
  SECTION("cluster-constant STR target reaches CH close to 1") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.2);
    std::vector<double> x(60), y(60);
    for (int i = 0; i < 60; ++i) {
      const bool hi = i % 2 == 0;
      x[i] = (hi ? 10.0 : -10.0) + g(rng);
      y[i] = hi ? 5.0 : -5.0;  // exactly constant within each cluster
    }
    auto d = make_regression({numeric_column("x1", std::move(x))},
                             {std::move(y)});
    const double ch = ch_score(d, 4);
    CHECK(ch >= 0.95);
    CHECK(ch <= 1.0);
  }
  SECTION("variance variant stays within [0, 1]") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(40), y(40);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    auto d = make_regression({numeric_column("x1", std::move(x))},
                             {std::move(y)});
    const double ch = ch_score(d, 8);
    CHECK(ch >= 0.0);
    CHECK(ch <= 1.0);
  }
  SECTION("single-example dataset is rejected") {
    auto d = make_regression({numeric_column("x1", {1.0})}, {{2.0}});
    CHECK_THROWS_AS(ch_score(d, 0), std::invalid_argument);
  }
}

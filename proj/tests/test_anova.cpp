#include <doctest.h>

#include <cmath>
#include <numbers>

#include "anovakrr/anova.hpp"
#include "anovakrr/error.hpp"
#include "anovakrr/oracle.hpp"
#include "test_support.hpp"

using namespace anovakrr;
using anovakrr::testing::random_vector;
using anovakrr::testing::relative_error;

namespace {

Eigen::MatrixXd gaussian_data(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = standard_normal(rng);
  return x;
}

Eigen::VectorXd balanced_labels(Eigen::Index n) {
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = i % 2 == 0 ? 1.0 : -1.0;
  return y;
}

// Row i of the ANOVA kernel matrix, written out from the kernel definition.
Eigen::VectorXd anova_row(const Eigen::MatrixXd& x, const WindowSet& w, double sigma,
                          Eigen::Index i) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    for (std::size_t l = 0; l < w.windows.size(); ++l) {
      double d2 = 0.0;
      for (int f : w.windows[l]) d2 += (x(i, f) - x(j, f)) * (x(i, f) - x(j, f));
      row[j] += std::exp(-d2 / (sigma * sigma)) / static_cast<double>(w.windows.size());
    }
  }
  return row;
}

const AccuracyProfile kDefault = AccuracyProfile::get(Profile::standard);

}  // namespace

TEST_CASE("mis: constant feature, perfect predictor, errors") {
  const Eigen::Index n = 100;
  Eigen::MatrixXd x(n, 2);
  const Eigen::VectorXd y = balanced_labels(n);
  x.col(0).setConstant(3.5);
  x.col(1) = y;
  const auto report = mis_scores(x, y);
  CHECK(report.bins == 10);
  CHECK(report.scores[0] == 0.0);
  CHECK(std::abs(report.scores[1] - std::numbers::ln2) <= 1e-9);
  CHECK(report.ranking == std::vector<int>{1, 0});

  CHECK_THROWS_AS(mis_scores(x, Eigen::VectorXd::Ones(n)), ValidationError);
  CHECK_THROWS_AS(mis_scores(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), ValidationError);
  CHECK_THROWS_AS(mis_scores(x, Eigen::VectorXd::Zero(n)), ValidationError);
}

TEST_CASE("mis: independent feature has small plug-in bias at N=10000") {
  // Bias of the plug-in estimator is about (B - 1) / (2N) = 0.00315 nats
  // for B = 64 bins and a binary label.
  Rng rng(10000);
  const Eigen::Index n = 10000;
  Eigen::MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = uniform_unit(rng);
  const auto report = mis_scores(x, balanced_labels(n));
  CHECK(report.bins == 64);
  CHECK(report.scores[0] <= 0.05);
  CHECK(report.scores[0] >= 0.0);
}

TEST_CASE("mis: ties rank by ascending index, scores are affine invariant") {
  Rng rng(5);
  const Eigen::Index n = 400;
  const Eigen::VectorXd y = balanced_labels(n);
  Eigen::MatrixXd x(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = uniform_unit(rng);
    x(i, 1) = y[i] + 0.8 * standard_normal(rng);
    x(i, 2) = x(i, 0);
    x(i, 3) = y[i] + 0.1 * standard_normal(rng);
  }
  const auto report = mis_scores(x, y);
  CHECK(report.scores[0] == report.scores[2]);
  CHECK(report.ranking == std::vector<int>{3, 1, 0, 2});

  Eigen::MatrixXd z = x;
  for (Eigen::Index f = 0; f < z.cols(); ++f) {
    const double mean = z.col(f).mean();
    const double sd = std::sqrt((z.col(f).array() - mean).square().mean());
    z.col(f) = (z.col(f).array() - mean) / sd;
  }
  const auto rescaled = mis_scores(z, y);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(rescaled.scores[f] == doctest::Approx(report.scores[f]).epsilon(1e-12));
  }
}

TEST_CASE("mis report json") {
  MisReport r{{0.2, 0.5}, {1, 0}, 8};
  const auto j = to_json(r, {"a", "b"});
  CHECK(j["schema"] == "mis-report/1");
  CHECK(j["features"][1]["name"] == "b");
  CHECK(j["ranking"][0] == 1);
}

TEST_CASE("windows from MIS ranking") {
  MisReport ten;
  for (int f = 0; f < 10; ++f) {
    ten.scores.push_back(0.1 * (f % 4));
  }
  ten.ranking = {3, 7, 2, 6, 1, 5, 9, 0, 4, 8};
  const auto w = build_windows(ten, 0.0);
  REQUIRE(w.size() == 4);
  CHECK(w.windows[0] == std::vector<int>{3, 7, 2});
  CHECK(w.windows[3] == std::vector<int>{8});
  for (double eta : w.weights) CHECK(eta == 0.25);
  CHECK(w.dropped.empty());

  MisReport three{{0.3, 0.2, 0.1}, {0, 1, 2}, 4};
  const auto one = build_windows(three, 0.0);
  REQUIRE(one.size() == 1);
  CHECK(one.weights[0] == 1.0);

  MisReport tied{{0.5, 0.5, 0.1}, {0, 1, 2}, 4};
  const auto kept = build_windows(tied, 0.2);
  REQUIRE(kept.size() == 1);
  CHECK(kept.windows[0] == std::vector<int>{0, 1});
  CHECK(kept.dropped == std::vector<int>{2});

  CHECK_THROWS_AS(build_windows(tied, 0.9), ValidationError);
}

TEST_CASE("window invariants: disjoint, covering, normalized; json round trip") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(uniform_below(rng, 30));
    MisReport r;
    for (int f = 0; f < d; ++f) r.scores.push_back(uniform_unit(rng) * 0.7);
    r.ranking.resize(static_cast<std::size_t>(d));
    std::iota(r.ranking.begin(), r.ranking.end(), 0);
    std::stable_sort(r.ranking.begin(), r.ranking.end(),
                     [&](int a, int b) { return r.scores[a] > r.scores[b]; });
    const double threshold = uniform_unit(rng) * 0.3;
    WindowSet w;
    try {
      w = build_windows(r, threshold);
    } catch (const ValidationError&) {
      continue;
    }
    std::vector<int> all = w.retained();
    all.insert(all.end(), w.dropped.begin(), w.dropped.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expected(static_cast<std::size_t>(d));
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);
    for (int f : w.retained()) CHECK(r.scores[f] >= threshold);
    for (int f : w.dropped) CHECK(r.scores[f] < threshold);
    double total = 0.0;
    for (double eta : w.weights) total += eta;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    const auto back = windows_from_json(to_json(w));
    CHECK(back.windows == w.windows);
    CHECK(back.weights == w.weights);
  }
}

TEST_CASE("window set validation") {
  WindowSet bad;
  bad.feature_count = 4;
  bad.windows = {{0, 1}, {2, 3}};
  bad.weights = {0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.windows = {{0, 1, 2}, {2}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.windows = {{0, 1, 2}, {4}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("single window equals plain fast summation on its columns") {
  Rng rng(21);
  const Eigen::MatrixXd x = gaussian_data(rng, 120, 5);
  const auto w = WindowSet::from_order({4, 0, 2}, 5);
  const auto op = AnovaKernelOperator::build(x, w, 1.0, kDefault);
  const auto plain =
      FastsumOperator::build(RadialKernel::gaussian(1.0), PeriodizationConfig::for_profile(kDefault),
                             kDefault, window_columns(x, {4, 0, 2}));
  const Eigen::VectorXd a = random_vector(rng, 120);
  CHECK((op.apply(a) - plain.apply(a)).norm() == 0.0);
}

TEST_CASE("unit vectors pick rows of the entrywise kernel matrix") {
  Rng rng(22);
  const Eigen::MatrixXd x = gaussian_data(rng, 60, 7);
  const auto w = WindowSet::from_order({0, 1, 2, 3, 4, 5, 6}, 7);
  const auto op = AnovaKernelOperator::build(x, w, 1.5, kDefault);
  for (Eigen::Index i : {0, 17, 59}) {
    CHECK(relative_error(op.apply(Eigen::VectorXd::Unit(60, i)), anova_row(x, w, 1.5, i)) <= 1e-3);
  }
}

TEST_CASE("window order does not change the result") {
  Rng rng(23);
  const Eigen::MatrixXd x = gaussian_data(rng, 80, 9);
  WindowSet w = WindowSet::from_order({0, 1, 2, 3, 4, 5, 6, 7, 8}, 9);
  WindowSet reversed = w;
  std::reverse(reversed.windows.begin(), reversed.windows.end());
  const Eigen::VectorXd a = random_vector(rng, 80);
  const Eigen::VectorXd s1 = AnovaKernelOperator::build(x, w, 1.0, kDefault).apply(a);
  const Eigen::VectorXd s2 = AnovaKernelOperator::build(x, reversed, 1.0, kDefault).apply(a);
  CHECK(relative_error(s2, s1) <= 1e-12);
}

TEST_CASE("operator contracts") {
  Rng rng(24);
  const Eigen::MatrixXd x = gaussian_data(rng, 30, 4);
  const auto w = WindowSet::from_order({0, 1, 2, 3}, 4);
  const auto op = AnovaKernelOperator::build(x, w, 1.0, kDefault);
  CHECK(op.apply(Eigen::VectorXd::Zero(30)).norm() == 0.0);
  CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(31)), ValidationError);
  CHECK_THROWS_AS(AnovaKernelOperator::build(gaussian_data(rng, 30, 3), w, 1.0, kDefault),
                  ValidationError);
  CHECK_THROWS_AS(AnovaKernelOperator::build(x, w, -1.0, kDefault), ValidationError);
  WindowSet empty;
  empty.feature_count = 4;
  CHECK_THROWS_AS(AnovaKernelOperator::build(x, empty, 1.0, kDefault), ValidationError);

  const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(25, 4, 0.7);
  const auto flat = AnovaKernelOperator::build(same, w, 1.0, kDefault);
  const Eigen::VectorXd s = flat.apply(Eigen::VectorXd::Ones(25));
  CHECK((s.array() - 25.0).abs().maxCoeff() <= 1e-6 * 25.0);
}

TEST_CASE("fast ANOVA apply matches the dense oracle and is symmetric") {
  Rng rng(500);
  const Eigen::MatrixXd x = gaussian_data(rng, 500, 9);
  const auto w = WindowSet::from_order({0, 1, 2, 3, 4, 5, 6, 7, 8}, 9);
  const auto op = AnovaKernelOperator::build(x, w, 1.0, kDefault);
  const auto dense = assemble_dense(x, w, 1.0);
  const Eigen::VectorXd a = random_vector(rng, 500);
  const Eigen::VectorXd b = random_vector(rng, 500);
  const double err = relative_error(op.apply(a), (dense.values * a).eval());
  MESSAGE("N=500 d=9 P=3 relative error ", err);
  CHECK(err <= 1e-3);
  const double lhs = op.apply(a).dot(b);
  CHECK(std::abs(lhs - a.dot(op.apply(b))) <= 1e-8 * std::abs(lhs));
}

TEST_CASE("rectangular operator evaluates at new targets") {
  Rng rng(501);
  const Eigen::MatrixXd x = gaussian_data(rng, 200, 5);
  const Eigen::MatrixXd z = gaussian_data(rng, 70, 5);
  const auto w = WindowSet::from_order({2, 0, 4, 1, 3}, 5);
  const auto op = AnovaKernelOperator::build(x, w, 1.2, kDefault, z);
  CHECK(op.target_count() == 70);
  const Eigen::VectorXd a = random_vector(rng, 200);
  const auto dense = assemble_dense(x, w, 1.2, z);
  CHECK(relative_error(op.apply(a), (dense.values * a).eval()) <= 1e-3);
}

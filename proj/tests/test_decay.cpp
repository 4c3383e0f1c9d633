#include <doctest.h>

#include "check_near.hpp"

#include <random>

#include "forgetting/decay.hpp"
#include "oracles.hpp"

using namespace forgetting;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

RetentionMatrix rows(std::vector<std::vector<int>> data) {
  RetentionBits bits(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data[0].size()));
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ids.push_back("r" + std::to_string(i + 1));
    for (std::size_t e = 0; e < data[i].size(); ++e) {
      bits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) = static_cast<std::uint8_t>(data[i][e]);
    }
  }
  return RetentionMatrix(ids, bits);
}

}  // namespace

TEST_CASE("never-forgotten vector fits lambda 0") {
  const auto fit = fit_lambda(vec({1, 1, 1, 1, 1}));
  CHECK(fit.lambda == 0.0);
  CHECK(fit.sse == 0.0);
  const auto single = fit_lambda(vec({1}));
  CHECK(single.lambda == 0.0);
  CHECK(single.sse == 0.0);
}

TEST_CASE("immediate drop hits the upper bound") {
  // Frozen from oracle::brute_force_lambda at 1e6 points: SSE is strictly
  // decreasing in lambda for 1 followed by zeros, so the scan settles on 10.
  constexpr double kOracleLambda = 10.0;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(40);
  r(0) = 1.0;
  const auto scan = oracle::brute_force_lambda(to_std(r));
  CHECK(scan.lambda == kOracleLambda);
  const auto fit = fit_lambda(r);
  CHECK_NEAR(fit.lambda, kOracleLambda, 1e-4);
}

TEST_CASE("fit_lambda errors") {
  CHECK_THROWS_AS(fit_lambda(Eigen::VectorXd(0)), Error);
  try {
    fit_lambda(Eigen::VectorXd(0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySequence);
  }
  CHECK_THROWS_AS(fit_lambda(vec({0, 1})), Error);
  FitConfig bad;
  bad.grid_points = 1;
  CHECK_THROWS_AS(fit_lambda(vec({1, 0}), bad), Error);
}

TEST_CASE("r_squared conventions") {
  CHECK(r_squared(vec({1, 1, 1, 1}), 0.0) == 1.0);
  CHECK(r_squared(vec({1, 1, 1, 1}), 1.0) == 0.0);
  CHECK_THROWS_AS(r_squared(Eigen::VectorXd(0), 0.0), Error);
}

TEST_CASE("r_squared at the least-squares lambda of an alternating vector") {
  // Frozen from a 1e6-point SSE scan: argmin 0.22284, R^2 -0.150263042.
  const auto r = vec({1, 0, 1, 0, 1});
  const auto scan = oracle::brute_force_lambda(to_std(r));
  CHECK_NEAR(scan.lambda, 0.22284, 1e-5);
  const auto fit = fit_lambda(r);
  CHECK_NEAR(fit.lambda, scan.lambda, 1e-4);
  const double r2 = r_squared(r, fit.lambda);
  CHECK_NEAR(r2, oracle::r_squared(to_std(r), scan.lambda), 1e-8);
  CHECK_NEAR(r2, -0.150263042, 1e-8);
}

TEST_CASE("fit_all composes the three cases") {
  const auto fits = fit_all(rows({{1, 1, 1}, {0, 0, 0}, {1, 0, 1}}));
  REQUIRE(fits.size() == 3);
  CHECK(fits[0].status == FitStatus::NeverForgotten);
  CHECK(fits[0].lambda == 0.0);
  CHECK(fits[0].r_squared == 1.0);
  CHECK(fits[2].status == FitStatus::Fitted);
  const auto direct = fit_lambda(vec({1, 0, 1}));
  CHECK(fits[2].lambda == direct.lambda);
  CHECK(fits[2].sse == direct.sse);
  CHECK(fits[1].status == FitStatus::NeverLearnedImputed);
  CHECK_FALSE(fits[1].r_squared.has_value());
  CHECK(fits[1].lambda == doctest::Approx(0.99 * direct.lambda).epsilon(1e-15));
}

TEST_CASE("fit_all with no learned samples") {
  try {
    fit_all(rows({{0, 0, 0}, {0, 0, 0}}));
    FAIL("expected AllSamplesNeverLearned");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllSamplesNeverLearned);
  }
}

TEST_CASE("fit_all is independent of thread count") {
  std::mt19937 rng(3);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<int>> data(64, std::vector<int>(15));
  for (auto& row : data) {
    for (auto& v : row) v = coin(rng);
  }
  FitConfig one;
  FitConfig four;
  four.threads = 4;
  const auto a = fit_all(rows(data), one);
  const auto b = fit_all(rows(data), four);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lambda == b[i].lambda);
    CHECK(a[i].status == b[i].status);
  }
}

TEST_CASE("percentile uses inclusive linear interpolation") {
  CHECK(percentile({0.0, 10.0}, 99.0) == doctest::Approx(9.9));
  CHECK(percentile({3.0, 1.0, 2.0}, 50.0) == 2.0);
  CHECK(percentile({5.0}, 99.0) == 5.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 100.0) == 4.0);
}

TEST_CASE("epsilon floor") {
  std::vector<DecayFit> fits(3);
  fits[0].lambda = 0.0;
  fits[1].lambda = 0.5;
  fits[2].lambda = 0.005;
  const auto floored = apply_epsilon_floor(fits);
  CHECK(floored(0) == 0.01);
  CHECK(floored(1) == 0.5);
  CHECK(floored(2) == 0.01);
  CHECK(fits[0].lambda == 0.0);
}

TEST_CASE("property: solver never worsens the grid minimizer and is deterministic") {
  std::mt19937 rng(99);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> len(1, 30);
  const FitConfig config;
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::VectorXd r(len(rng));
    r(0) = 1.0;
    for (Eigen::Index t = 1; t < r.size(); ++t) r(t) = coin(rng) ? 1.0 : 0.0;
    const auto fit = fit_lambda(r, config);
    const auto again = fit_lambda(r, config);
    CHECK(fit.lambda == again.lambda);
    CHECK(fit.lambda >= 0.0);
    CHECK(fit.lambda <= 10.0);
    double best_grid_r2 = -INFINITY;
    for (int k = 0; k < config.grid_points; ++k) {
      const double lambda = 10.0 * k / (config.grid_points - 1);
      CHECK(fit.sse <= decay_sse(r, lambda) + 1e-12);
      best_grid_r2 = std::max(best_grid_r2, r_squared(r, lambda));
    }
    CHECK(r_squared(r, fit.lambda) >= best_grid_r2 - 1e-12);
    CHECK(fit.sse == doctest::Approx(decay_sse(r, fit.lambda)).epsilon(1e-12));
  }
}

TEST_CASE("property: all-ones vectors fit zero at every length") {
  for (int n = 1; n <= 60; ++n) CHECK(fit_lambda(Eigen::VectorXd::Ones(n)).lambda == 0.0);
}

TEST_CASE("property: earlier drops never fit a smaller lambda") {
  // Sequences 1^k 0^(n-k) of fixed length n: a shorter run of ones (longer
  // trailing zeros) must not decrease lambda. Checked against the oracle scan.
  constexpr int n = 20;
  double previous = INFINITY;
  for (int ones = 1; ones < n; ++ones) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    r.head(ones).setOnes();
    const double lambda = fit_lambda(r).lambda;
    CHECK(lambda <= previous + 1e-9);
    const auto scan = oracle::brute_force_lambda(to_std(r), 100001);
    CHECK_NEAR(lambda, scan.lambda, 2e-4);
    previous = lambda;
  }
}

TEST_CASE("templated numerics accept float expressions") {
  Eigen::VectorXf r(3);
  r << 1.0f, 0.0f, 1.0f;
  CHECK(decay_sse(r, 0.0f) == doctest::Approx(1.0f));
  BinaryRow b(2);
  b << 1, 1;
  CHECK(r_squared(b, 0.0) == 1.0);
}

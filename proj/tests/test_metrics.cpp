#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "plmodel/error.hpp"
#include "plmodel/metrics.hpp"

using namespace plmodel;

namespace {

using V = std::vector<double>;

std::pair<V, V> random_pair(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(60.0, 160.0), e(-8.0, 8.0);
  V y(n), yhat(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = u(rng);
    yhat[i] = y[i] + e(rng);
  }
  return {y, yhat};
}

}  // namespace

TEST_CASE("rmse") {
  CHECK(rmse(V{100, 110}, V{100, 110}) == 0.0);
  CHECK(rmse(V{100, 110}, V{102, 106}) == doctest::Approx(3.16228).epsilon(1e-5 / 3.16228));
  CHECK(rmse(V{100, 110}, V{102, 106}) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
  CHECK(rmse(V{100 + 37.5, 110 + 37.5}, V{102 + 37.5, 106 + 37.5}) ==
        doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
  CHECK_THROWS_AS(rmse(V{}, V{}), ValidationError);
  CHECK_THROWS_AS(rmse(V{1}, V{1, 2}), ValidationError);
  const auto [y, yh] = random_pair(50, 1);
  CHECK(rmse(y, yh) > 0.0);
}

TEST_CASE("mape") {
  CHECK(mape(V{100, 110}, V{100, 110}) == 0.0);
  CHECK(mape(V{100, 110}, V{102, 106}) == doctest::Approx(2.818).epsilon(0.001 / 2.818));
  CHECK(mape(V{100, 110}, V{102, 106}) == doctest::Approx((0.02 + 4.0 / 110.0) / 2.0 * 100.0).epsilon(1e-14));
  CHECK(mape(V{300, 330}, V{306, 318}) == doctest::Approx(mape(V{100, 110}, V{102, 106})).epsilon(1e-12));
  CHECK_THROWS_AS(mape(V{0, 1}, V{1, 1}), DomainError);
}

TEST_CASE("msle") {
  CHECK(msle(V{100, 110}, V{100, 110}) == 0.0);
  CHECK(msle(V{std::exp(1.0) - 1.0}, V{0.0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(msle(V{100}, V{110}) == doctest::Approx(0.008894).epsilon(1e-6 / 0.008894));
  const auto [y, yh] = random_pair(40, 2);
  CHECK(msle(y, yh) == doctest::Approx(msle(yh, y)).epsilon(1e-14));
  CHECK_THROWS_AS(msle(V{-1.0}, V{1.0}), DomainError);
}

TEST_CASE("pearson") {
  const V y{1, 2, 3, 4, 7};
  V affine, neg;
  for (double v : y) affine.push_back(2 * v + 3), neg.push_back(-v);
  CHECK(pearson(y, affine) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(y, affine) <= 1.0);
  CHECK(pearson(y, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(pearson(V{1, 2, 3}, V{1, 3, 2}) - 0.5) < 1e-9);
  const auto [a, b] = random_pair(30, 3);
  V b2;
  for (double v : b) b2.push_back(0.25 * v - 11.0);
  CHECK(pearson(a, b2) == doctest::Approx(pearson(a, b)).epsilon(1e-12));
  CHECK_THROWS_AS(pearson(V{1, 1, 1}, V{1, 2, 3}), DomainError);
  CHECK_THROWS_AS(pearson(V{1}, V{2}), DomainError);
}

TEST_CASE("stratified report") {
  const V y{100, 120, 130, 90};
  const V yh{101, 118, 135, 96};
  const std::vector<bool> los{true, false, true, false};
  const EvaluationReport r = evaluate_stratified(y, yh, los);
  REQUIRE(r.los);
  REQUIRE(r.nlos);
  REQUIRE(r.total);
  CHECK(r.los->count == 2);
  CHECK(r.nlos->count == 2);
  CHECK(r.total->count == 4);
  CHECK(r.los->rmse_db == doctest::Approx(rmse(V{100, 130}, V{101, 135})).epsilon(1e-15));
  CHECK(r.nlos->rmse_db == doctest::Approx(rmse(V{120, 90}, V{118, 96})).epsilon(1e-15));
  CHECK(r.nlos->mape_pct == doctest::Approx(mape(V{120, 90}, V{118, 96})).epsilon(1e-15));
  CHECK(r.los->msle == doctest::Approx(msle(V{100, 130}, V{101, 135})).epsilon(1e-15));
  CHECK(*r.nlos->rho == doctest::Approx(pearson(V{120, 90}, V{118, 96})).epsilon(1e-15));
  CHECK(r.total->rmse_db == doctest::Approx(rmse(y, yh)).epsilon(1e-15));

  const EvaluationReport all_los = evaluate_stratified(y, yh, {true, true, true, true});
  CHECK_FALSE(all_los.nlos.has_value());
  CHECK(all_los.los->rmse_db == all_los.total->rmse_db);

  const EvaluationReport perfect = evaluate_stratified(y, y, los);
  CHECK(perfect.total->rmse_db == 0.0);
  CHECK(perfect.total->mape_pct == 0.0);
  CHECK(perfect.total->msle == 0.0);

  CHECK_THROWS_AS(evaluate_stratified(y, yh, {true}), ValidationError);

  const std::string csv = report_csv(r);
  CHECK(csv.rfind("stratum,count,rmse_db,mape_pct,msle,rho\n", 0) == 0);
  CHECK(csv.find("\nLoS,2,") != std::string::npos);
  CHECK(csv.find("\nTotal,4,") != std::string::npos);
  const std::string table = report_table(all_los, "demo");
  CHECK(table.find("demo") != std::string::npos);
  CHECK(table.find("NLoS          -\n") != std::string::npos);
}

TEST_CASE("pooled rmse squared decomposes by stratum counts") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    const auto [y, yh] = random_pair(n, rng());
    std::vector<bool> los(n);
    for (std::size_t i = 0; i < n; ++i) los[i] = rng() % 4 != 0;
    los[0] = true;
    los[1] = false;
    const EvaluationReport r = evaluate_stratified(y, yh, los);
    const double nl = static_cast<double>(r.los->count), nn = static_cast<double>(r.nlos->count);
    CHECK(r.los->count + r.nlos->count == r.total->count);
    const double pooled = (nl * r.los->rmse_db * r.los->rmse_db + nn * r.nlos->rmse_db * r.nlos->rmse_db) / (nl + nn);
    CHECK(r.total->rmse_db * r.total->rmse_db == doctest::Approx(pooled).epsilon(1e-12));
  }
}

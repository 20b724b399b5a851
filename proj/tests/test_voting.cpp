// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "completion/errors.hpp"
#include "completion/voting.hpp"
#include "oracles.hpp"

using namespace completion;

TEST_CASE("classification vote worked examples") {
  const double third = 1.0 / 3.0;
  const auto pre = classification_vote(2, Phase::Pre, 4);
  CHECK(pre == VoteVector({0.0, 0.0, third, third, third}));
  const auto post = classification_vote(3, Phase::Post, 4);
  CHECK(post == VoteVector({third, third, third, 0.0, 0.0}));

  const auto last_pre = classification_vote(4, Phase::Pre, 4);
  CHECK(last_pre == VoteVector({0.0, 0.0, 0.0, 0.0, 1.0}));
}

TEST_CASE("classification vote sums to one and never mixes sides") {
  for (int T = 2; T <= 40; ++T) {
    for (int t = 1; t <= T; ++t) {
      for (Phase phase : {Phase::Pre, Phase::Post}) {
        const auto v = classification_vote(t, phase, T);
        REQUIRE(v.length() == T);
        CHECK(std::abs(v.sum() - 1.0) <= 1e-12);
        for (int j = 1; j <= T + 1; ++j) {
          if (phase == Phase::Pre && j <= t) CHECK(v.at(j) == 0.0);
          if (phase == Phase::Post && j > t) CHECK(v.at(j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("predicted moment") {
  CHECK(predicted_moment(6, 0.2, 10) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(predicted_moment(3, -0.999999, 10) == 11.0);
  CHECK(predicted_moment(3, -1.0, 10) == 11.0);
  CHECK(predicted_moment(3, -7.0, 10) == 11.0);
  CHECK(predicted_moment(3, 100.0, 10) == 1.0);
  CHECK(predicted_moment(3, std::nextafter(-1.0 + kSingularMargin, 0.0), 10) ==
        11.0);
}

TEST_CASE("predicted moment is monotone non-increasing in R") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.999, 5.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int T = 2 + static_cast<int>(rng() % 60);
    const int t = 1 + static_cast<int>(rng() % static_cast<unsigned>(T));
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const double ma = predicted_moment(t, a, T);
    const double mb = predicted_moment(t, b, T);
    CHECK(ma >= mb);
    CHECK(ma >= 1.0);
    CHECK(ma <= T + 1.0);
  }
}

TEST_CASE("regression vote worked example") {
  // t=10, R=0 gives mu=10 exactly; bin 13 is three frames away.
  VoteParams wide;
  wide.alpha = 1.0;
  const auto v = regression_vote(10, 0.0, 40, wide);
  CHECK(v.at(13) == doctest::Approx(0.5 * std::exp(-9.0 / 1800.0)).epsilon(1e-14));
  CHECK(v.at(10) == doctest::Approx(0.5));
}

TEST_CASE("regression window covers at most alpha*T + 1 bins") {
  const VoteParams params;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double R = u(rng);
    const int t = 1 + static_cast<int>(rng() % 20);
    const auto v = regression_vote(t, R, 20, params);
    int nonzero = 0;
    for (double x : v.values()) nonzero += x > 0.0 ? 1 : 0;
    CHECK(nonzero >= 1);
    CHECK(nonzero <= 3);
  }
}

TEST_CASE("regression vote bounds and extreme relative times") {
  const VoteParams params;
  for (double R : {-5.0, -1.0, -0.999999, 1e6}) {
    const auto v = regression_vote(5, R, 30, params);
    for (double x : v.values()) {
      CHECK(std::isfinite(x));
      CHECK(x >= 0.0);
      CHECK(x <= params.beta);
    }
  }
  const auto singular = regression_vote(5, -1.0, 30, params);
  CHECK(singular.at(31) == doctest::Approx(params.beta));
}

TEST_CASE("votes agree with the reference oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> rel(-1.2, 3.0);
  std::uniform_real_distribution<double> sig(1.0, 40.0);
  std::uniform_real_distribution<double> beta(0.1, 2.0);
  std::uniform_real_distribution<double> alpha(0.01, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 2 + static_cast<int>(rng() % 80);
    const int t = 1 + static_cast<int>(rng() % static_cast<unsigned>(T));
    const VoteParams p{sig(rng), beta(rng), alpha(rng)};
    const double R = rel(rng);
    const auto got = regression_vote(t, R, T, p);
    const auto want = oracle::regression_vote(t, R, T, p);
    for (int j = 1; j <= T + 1; ++j) {
      CHECK(std::abs(got.at(j) - want[static_cast<std::size_t>(j - 1)]) <= 1e-9);
    }
    const Phase phase = (rng() & 1) ? Phase::Post : Phase::Pre;
    const auto c = classification_vote(t, phase, T);
    const auto cw = oracle::classification_vote(t, phase, T);
    for (int j = 1; j <= T + 1; ++j) {
      CHECK(std::abs(c.at(j) - cw[static_cast<std::size_t>(j - 1)]) <= 1e-9);
    }
  }
}

TEST_CASE("vote parameters and vector shapes are validated") {
  CHECK_THROWS_AS(VoteParams({0.0, 0.5, 0.1}).validate(), ConfigError);
  CHECK_THROWS_AS(VoteParams({30.0, -1.0, 0.1}).validate(), ConfigError);
  CHECK_THROWS_AS(VoteParams({30.0, 0.5, 1.5}).validate(), ConfigError);
  CHECK_NOTHROW(VoteParams{}.validate());

  VoteVector a(3);
  CHECK_THROWS(a += VoteVector(4));
  CHECK_THROWS(VoteVector(std::vector<double>{1.0}));
}

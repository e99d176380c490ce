// Copyright 2026 The dpaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpaudit/auditor.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "dpaudit/accountant.h"
#include "dpaudit/noise_stream.h"
#include "dpaudit/stats.h"
#include "oracles.h"

namespace dpaudit {
namespace {

std::vector<double> Gaussians(NoiseStream& rng, size_t n, double shift) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Gaussian() + shift;
  return v;
}

// Exhaustive sweep written from the definition: every candidate threshold,
// both directions, each scored through the public pointwise functions.
double BruteForceBestMu(const ObservationSet& obs, double alpha) {
  std::vector<double> values = obs.without;
  values.insert(values.end(), obs.with.begin(), obs.with.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> taus = {values.front() - 1.0, values.back() + 1.0};
  for (size_t i = 0; i + 1 < values.size(); ++i) {
    taus.push_back(0.5 * (values[i] + values[i + 1]));
  }
  double best = 0.0;
  for (double tau : taus) {
    for (Direction d : {Direction::kPaper, Direction::kFlipped}) {
      const ErrorCounts c = CountsAtThreshold(obs, tau, d);
      const double fpr = oracle::ClopperPearsonUpperBeta(
          c.false_positives, obs.without.size(), alpha / 2);
      const double fnr = oracle::ClopperPearsonUpperBeta(
          c.false_negatives, obs.with.size(), alpha / 2);
      if (fpr >= 1.0 || fnr >= 1.0) continue;
      best = std::max(best, -(oracle::PhiInverse(fpr) + oracle::PhiInverse(fnr)));
    }
  }
  return best;
}

TEST(RatesAtThresholdTest, Examples) {
  const ObservationSet obs{.without = {1, 3}, .with = {0, 2}};
  ErrorRates r = RatesAtThreshold(obs, -10, Direction::kPaper);
  EXPECT_EQ(r.fpr, 1.0);
  EXPECT_EQ(r.fnr, 0.0);
  r = RatesAtThreshold(obs, 10, Direction::kPaper);
  EXPECT_EQ(r.fpr, 0.0);
  EXPECT_EQ(r.fnr, 1.0);
  r = RatesAtThreshold(obs, 1.5, Direction::kPaper);
  EXPECT_EQ(r.fpr, 0.5);
  EXPECT_EQ(r.fnr, 0.5);
}

TEST(RatesAtThresholdTest, DirectionsTreatTiesOppositely) {
  const ObservationSet obs{.without = {1, 2}, .with = {2, 3}};
  // Paper: without >= tau is a false positive, with < tau a false negative.
  EXPECT_EQ(CountsAtThreshold(obs, 2, Direction::kPaper).false_positives, 1);
  EXPECT_EQ(CountsAtThreshold(obs, 2, Direction::kPaper).false_negatives, 0);
  // Flipped: without <= tau and with > tau.
  EXPECT_EQ(CountsAtThreshold(obs, 2, Direction::kFlipped).false_positives, 2);
  EXPECT_EQ(CountsAtThreshold(obs, 2, Direction::kFlipped).false_negatives, 1);
}

TEST(EstimateDpTest, Examples) {
  EXPECT_EQ(EstimateDp(0.5, 0.5, 1e-5)->epsilon, 0.0);
  EXPECT_EQ(EstimateDp(0.7, 0.4, 1e-5)->epsilon, 0.0);
  const DpEstimate e = *EstimateDp(0.1, 0.1, 1e-5);
  EXPECT_NEAR(e.mu, 2.563103131, 1e-8);
  EXPECT_NEAR(e.epsilon, oracle::GdpEpsilon(2 * oracle::PhiInverse(0.9), 1e-5),
              1e-8);
  EXPECT_TRUE(EstimateDp(1.0, 0.1, 1e-5)->degenerate);
}

TEST(AuditTest, IdenticalArmsGiveZero) {
  NoiseStream rng(1);
  const std::vector<double> v = Gaussians(rng, 100, 0);
  const AuditReport r = *Audit({.without = v, .with = v}, 0.05, 1e-5);
  EXPECT_EQ(r.eps_emp, 0.0);
  EXPECT_EQ(r.mu_emp, 0.0);
  EXPECT_EQ(r.n_without, 100);
  EXPECT_EQ(r.n_with, 100);
}

TEST(AuditTest, PerfectSeparationUsesZeroCountBounds) {
  std::vector<double> low(512), high(512);
  for (int i = 0; i < 512; ++i) {
    low[i] = i * 1e-3;
    high[i] = 10.0 + i * 1e-3;
  }
  // Members have the lower loss, so the flipped direction separates.
  const AuditReport r = *Audit({.without = high, .with = low}, 0.05, 1e-5);
  const double u = 1.0 - std::pow(0.025, 1.0 / 512);
  const double mu = -2.0 * oracle::PhiInverse(u);
  EXPECT_EQ(r.false_positives, 0);
  EXPECT_EQ(r.false_negatives, 0);
  EXPECT_EQ(r.direction, Direction::kFlipped);
  EXPECT_DOUBLE_EQ(r.tau, 0.5 * (0.511 + 10.0));
  EXPECT_NEAR(r.fpr_upper, u, 1e-12);
  EXPECT_NEAR(r.mu_emp, mu, 1e-9);
  EXPECT_NEAR(r.eps_emp, oracle::GdpEpsilon(mu, 1e-5), 1e-7);
}

TEST(AuditTest, SwappingArmsFlipsDirectionOnly) {
  NoiseStream rng(2);
  const std::vector<double> a = Gaussians(rng, 80, 0);
  const std::vector<double> b = Gaussians(rng, 80, 1.5);
  const AuditReport ab = *Audit({.without = a, .with = b}, 0.05, 1e-5);
  const AuditReport ba = *Audit({.without = b, .with = a}, 0.05, 1e-5);
  EXPECT_GT(ab.eps_emp, 0.0);
  EXPECT_EQ(ab.eps_emp, ba.eps_emp);
  EXPECT_NE(ab.direction, ba.direction);
}

TEST(AuditTest, MatchesBruteForceSweep) {
  NoiseStream rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t n0 = 5 + trial % 13, n1 = 7 + trial % 11;
    ObservationSet obs{.without = Gaussians(rng, n0, 0.0),
                       .with = Gaussians(rng, n1, 0.3 * (trial % 7) - 0.9)};
    // Some exact ties across arms.
    obs.with[0] = obs.without[0];
    const AuditReport r = *Audit(obs, 0.05, 1e-5);
    EXPECT_NEAR(r.mu_emp, BruteForceBestMu(obs, 0.05), 1e-9) << trial;
    if (r.mu_emp > 0) {
      const ErrorCounts c = CountsAtThreshold(obs, r.tau, r.direction);
      EXPECT_EQ(c.false_positives, r.false_positives);
      EXPECT_EQ(c.false_negatives, r.false_negatives);
      EXPECT_GE(r.fpr_upper, r.fpr);
      EXPECT_GE(r.fnr_upper, r.fnr);
      EXPECT_NEAR(r.eps_emp, *MuToEpsilon(r.mu_emp, 1e-5), 0.0);
    }
  }
}

TEST(AuditTest, InvariantUnderPermutationAndMonotoneTransform) {
  NoiseStream rng(4);
  ObservationSet obs{.without = Gaussians(rng, 60, 0.0),
                     .with = Gaussians(rng, 60, -1.0)};
  const double eps = Audit(obs, 0.05, 1e-5)->eps_emp;
  std::reverse(obs.without.begin(), obs.without.end());
  std::rotate(obs.with.begin(), obs.with.begin() + 17, obs.with.end());
  EXPECT_EQ(Audit(obs, 0.05, 1e-5)->eps_emp, eps);
  for (auto* arm : {&obs.without, &obs.with}) {
    for (double& x : *arm) x = std::exp(x) * 3.0 + 1.0;
  }
  EXPECT_EQ(Audit(obs, 0.05, 1e-5)->eps_emp, eps);
}

TEST(AuditTest, AddingSeparatingObservationsNeverHurts) {
  NoiseStream rng(5);
  ObservationSet obs{.without = Gaussians(rng, 40, 1.0),
                     .with = Gaussians(rng, 40, 0.0)};
  double prev = Audit(obs, 0.05, 1e-5)->eps_emp;
  for (int i = 0; i < 20; ++i) {
    obs.without.push_back(100.0 + i);
    obs.with.push_back(-100.0 - i);
    const double now = Audit(obs, 0.05, 1e-5)->eps_emp;
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(AuditTest, CalibratedAtEpsilonZero) {
  NoiseStream rng(6);
  int exceed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const ObservationSet obs{.without = Gaussians(rng, 256, 0.0),
                             .with = Gaussians(rng, 256, 0.0)};
    const AuditReport r = *Audit(obs, 0.05, 1e-5);
    EXPECT_GE(r.eps_emp, 0.0);
    exceed += r.eps_emp > 0.5;
  }
  EXPECT_LE(exceed, 10);
}

TEST(AuditTest, Errors) {
  EXPECT_FALSE(Audit({.without = {}, .with = {1}}, 0.05, 1e-5).ok());
  EXPECT_FALSE(Audit({.without = {1}, .with = {2}}, 0.0, 1e-5).ok());
  EXPECT_FALSE(Audit({.without = {1}, .with = {2}}, 0.05, 1.0).ok());
  EXPECT_FALSE(Audit({.without = {std::nan("")}, .with = {2}}, 0.05, 1e-5).ok());
}

TEST(ReportFormatTest, RoundTrip) {
  NoiseStream rng(7);
  const AuditReport r = *Audit({.without = Gaussians(rng, 30, 0.0),
                                .with = Gaussians(rng, 30, -2.0)},
                               0.05, 1e-5);
  const std::string text = FormatReport(r);
  EXPECT_THAT(text, ::testing::StartsWith("tau = "));
  const AuditReport back = *ParseReport(text);
  EXPECT_EQ(FormatReport(back), text);
  EXPECT_EQ(back.eps_emp, r.eps_emp);
  EXPECT_EQ(back.direction, r.direction);
  EXPECT_FALSE(ParseReport("tau = 1\n").ok());
}

}  // namespace
}  // namespace dpaudit

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

#include "dpaudit/accountant.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"

namespace dpaudit {
namespace {

// Values below were produced by the nested-bisection oracle in oracles.h.
constexpr double kMuAtEps10 = 2.000445620431;
constexpr double kSigmaEps10T100 = 4.998886197090;
constexpr double kEpsAtMu1 = 4.377178095681;

TEST(GdpComposeTest, Examples) {
  const std::vector<double> zeros = {0, 0, 0};
  EXPECT_EQ(*GdpCompose(zeros), 0.0);
  const std::vector<double> one = {1.0};
  EXPECT_EQ(*GdpCompose(one), 1.0);
  const std::vector<double> hundred(100, 0.3);
  EXPECT_NEAR(*GdpCompose(hundred), 3.0, 1e-12);
}

TEST(GdpComposeTest, PermutationAndConcatenation) {
  std::vector<double> a = {0.1, 0.7, 0.25, 1.5};
  const std::vector<double> b = {0.4, 0.05};
  const double base = *GdpCompose(a);
  std::reverse(a.begin(), a.end());
  EXPECT_DOUBLE_EQ(*GdpCompose(a), base);
  std::vector<double> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const double lhs = std::pow(*GdpCompose(ab), 2);
  const double rhs = std::pow(*GdpCompose(a), 2) + std::pow(*GdpCompose(b), 2);
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(GdpComposeTest, RejectsNegative) {
  const std::vector<double> bad = {0.5, -0.1};
  EXPECT_FALSE(GdpCompose(bad).ok());
}

TEST(DeltaForEpsilonTest, Examples) {
  EXPECT_NEAR(*DeltaForEpsilon(0.0, 1.0), 0.382924922548026, 1e-12);
  EXPECT_NEAR(*DeltaForEpsilon(0.0, 1.0),
              static_cast<double>(oracle::Phi(0.5) - oracle::Phi(-0.5)), 1e-12);
  EXPECT_LT(*DeltaForEpsilon(0.0, 1e-9), 1e-9);
  const double tiny = *DeltaForEpsilon(50.0, 1.0);
  EXPECT_GE(tiny, 0.0);
  EXPECT_LT(tiny, 1e-300);
}

TEST(DeltaForEpsilonTest, MatchesFormulaWhereDirectEvaluationIsStable) {
  for (double mu : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    for (double eps : {0.0, 0.5, 1.0, 3.0, 8.0}) {
      const double want = static_cast<double>(oracle::GdpDelta(eps, mu));
      EXPECT_NEAR(*DeltaForEpsilon(eps, mu), want, 1e-12 + 1e-9 * want)
          << "eps=" << eps << " mu=" << mu;
    }
  }
}

TEST(DeltaForEpsilonTest, MonotoneInEpsilonAndMu) {
  for (double mu = 0.2; mu <= 6.0; mu += 0.2) {
    double prev = 2.0;
    for (double eps = 0.0; eps <= 20.0; eps += 0.25) {
      const double d = *DeltaForEpsilon(eps, mu);
      if (d < 1e-300) break;
      EXPECT_LT(d, prev + 1e-12);
      EXPECT_GT(*DeltaForEpsilon(eps, mu + 0.1), d - 1e-12);
      prev = d;
    }
  }
}

TEST(MuToEpsilonTest, Examples) {
  EXPECT_EQ(*MuToEpsilon(0.0, 1e-5), 0.0);
  const double eps = *MuToEpsilon(1.0, 1e-5);
  EXPECT_NEAR(eps, kEpsAtMu1, 1e-8);
  EXPECT_NEAR(*DeltaForEpsilon(eps, 1.0) / 1e-5, 1.0, 1e-8);
  EXPECT_GT(*MuToEpsilon(2.0, 1e-5), eps);
}

TEST(MuToEpsilonTest, MatchesOracle) {
  for (double mu : {0.05, 0.3, 1.0, 2.5, 7.0}) {
    EXPECT_NEAR(*MuToEpsilon(mu, 1e-5), oracle::GdpEpsilon(mu, 1e-5), 1e-8) << mu;
  }
}

TEST(EpsilonToMuTest, Examples) {
  EXPECT_EQ(*EpsilonToMu(0.0, 1e-5), 0.0);
  EXPECT_NEAR(*EpsilonToMu(10.0, 1e-5), kMuAtEps10, 1e-9);
  for (double eps : {1.0, 2.0, 4.0, 10.0}) {
    EXPECT_NEAR(*MuToEpsilon(*EpsilonToMu(eps, 1e-5), 1e-5), eps, 1e-6) << eps;
  }
}

TEST(EpsilonToMuTest, MutualInverseOverRange) {
  for (double mu = 0.01; mu <= 10.0; mu *= 1.25) {
    EXPECT_NEAR(*EpsilonToMu(*MuToEpsilon(mu, 1e-5), 1e-5), mu, 1e-6) << mu;
  }
}

TEST(EpsilonToMuTest, BracketFailureIsAnError) {
  EXPECT_FALSE(EpsilonToMu(1e5, 1e-5).ok());
  EXPECT_FALSE(EpsilonToMu(1.0, 0.0).ok());
  EXPECT_FALSE(MuToEpsilon(1.0, 1.0).ok());
}

TEST(CalibrateSigmaTest, Examples) {
  const double sigma = *CalibrateSigma({.epsilon = 1.0, .delta = 1e-5}, 100);
  EXPECT_NEAR(*TheoreticalEpsilon(sigma, 100, 1e-5), 1.0, 1e-6);
  // One step at mu = 1 needs sigma = 1.
  const double eps_mu1 = *MuToEpsilon(1.0, 1e-5);
  EXPECT_NEAR(*CalibrateSigma({.epsilon = eps_mu1, .delta = 1e-5}, 1), 1.0, 1e-9);
  EXPECT_NEAR(*CalibrateSigma({.epsilon = 10.0, .delta = 1e-5}, 100),
              kSigmaEps10T100, 1e-8);
}

TEST(TheoreticalEpsilonTest, Properties) {
  EXPECT_NEAR(*TheoreticalEpsilon(1.0, 1, 1e-5), kEpsAtMu1, 1e-8);
  EXPECT_LT(*TheoreticalEpsilon(1e6, 100, 1e-5), 1e-3);
  double prev = 1e9;
  for (double sigma = 0.5; sigma <= 20.0; sigma += 0.5) {
    const double e = *TheoreticalEpsilon(sigma, 100, 1e-5);
    EXPECT_LT(e, prev);
    EXPECT_GT(*TheoreticalEpsilon(sigma, 101, 1e-5), e);
    prev = e;
  }
}

TEST(MuEmpiricalTest, Examples) {
  EXPECT_EQ(*MuEmpirical(0.5, 0.5), 0.0);
  EXPECT_NEAR(*MuEmpirical(0.1, 0.1), 2.563103131, 1e-8);
  EXPECT_NEAR(*MuEmpirical(0.1, 0.1), 2 * oracle::PhiInverse(0.9), 1e-12);
  EXPECT_EQ(*MuEmpirical(0.9, 0.9), 0.0);
}

TEST(MuEmpiricalTest, Symmetric) {
  for (double a : {0.01, 0.2, 0.45}) {
    for (double b : {0.03, 0.3, 0.6}) {
      EXPECT_DOUBLE_EQ(*MuEmpirical(a, b), *MuEmpirical(b, a));
    }
  }
}

TEST(MuEmpiricalTest, BoundsOutsideOpenIntervalFail) {
  EXPECT_FALSE(MuEmpirical(0.0, 0.5).ok());
  EXPECT_FALSE(MuEmpirical(0.5, 1.0).ok());
}

}  // namespace
}  // namespace dpaudit

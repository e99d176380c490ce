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

// Scalar special functions used by the auditor and the privacy accountant:
// the standard normal CDF and quantile, binomial tails, and one-sided
// Clopper-Pearson upper confidence bounds.

#ifndef DPAUDIT_STATS_H_
#define DPAUDIT_STATS_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"

namespace dpaudit {

// Returns Phi(x). Non-finite x is an InvalidArgument error.
absl::StatusOr<double> NormalCdf(double x);

// Returns Phi^{-1}(p) for p in (0, 1). p equal to 0 or 1 is OutOfRange (the
// quantile is infinite); p outside [0, 1] or NaN is InvalidArgument.
absl::StatusOr<double> NormalQuantile(double p);

// Pr[X <= k] for X ~ Binomial(n, p), by direct summation of the pmf.
absl::StatusOr<double> BinomialTail(int64_t k, int64_t n, double p);

// Smallest p such that Pr[X <= k | Binomial(n, p)] <= alpha, i.e. the
// one-sided upper confidence bound at level 1 - alpha. Returns 1 when k == n,
// including the vacuous n == 0.
absl::StatusOr<double> ClopperPearsonUpper(int64_t k, int64_t n, double alpha);

// ClopperPearsonUpper(k, n, alpha) for every k in [0, n], sharing the
// binomial coefficient table across all n + 1 root searches.
absl::StatusOr<std::vector<double>> ClopperPearsonUpperTable(int64_t n,
                                                             double alpha);

namespace internal {

// Unchecked variants for callers that have already validated their inputs.
double StandardNormalCdf(double x);
// log Phi(x), accurate far into the lower tail where Phi(x) underflows.
double LogStandardNormalCdf(double x);
double StandardNormalQuantile(double p);

// Evaluates binomial lower tails for a fixed n.
class BinomialTailEvaluator {
 public:
  explicit BinomialTailEvaluator(int64_t n);

  // Pr[X <= k], 0 <= k <= n, 0 <= p <= 1.
  double Tail(int64_t k, double p) const;
  // Upper bound for k < n via bisection on p.
  double ClopperPearsonUpper(int64_t k, double alpha) const;

 private:
  int64_t n_;
  std::vector<double> log_choose_;
};

}  // namespace internal
}  // namespace dpaudit

#endif  // DPAUDIT_STATS_H_

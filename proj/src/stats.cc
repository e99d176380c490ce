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

#include "dpaudit/stats.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace dpaudit {
namespace internal {
namespace {

constexpr double kQuantileSplit = 0.02425;
constexpr double kBisectionTolerance = 1e-12;
constexpr int kMaxBisectionIterations = 200;

// Rational approximation of the lower-tail normal quantile (relative error
// about 1e-9), refined by Newton steps in StandardNormalQuantile.
double InitialLowerQuantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549671010229528e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  if (p < kQuantileSplit) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double StandardNormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double StandardNormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double LogStandardNormalCdf(double x) {
  if (x < -30.0) {
    // Asymptotic series of the Mills ratio; the first omitted term is below
    // 1e-12 relative at x = -30.
    const double inv_x2 = 1.0 / (x * x);
    const double series =
        1.0 - inv_x2 * (1.0 - 3.0 * inv_x2 * (1.0 - 5.0 * inv_x2 *
                                                        (1.0 - 7.0 * inv_x2)));
    return -0.5 * x * x - std::log(-x) -
           0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
  }
  if (x < 0.0) return std::log(StandardNormalCdf(x));
  return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
}

double StandardNormalQuantile(double p) {
  // 1 - p is exact for p in [0.5, 1], so the upper half reflects without
  // losing precision.
  if (p > 0.5) return -StandardNormalQuantile(1.0 - p);
  double x = InitialLowerQuantile(p);
  for (int i = 0; i < 2; ++i) {
    const double density = StandardNormalPdf(x);
    if (density == 0.0) break;
    x -= (StandardNormalCdf(x) - p) / density;
  }
  return x;
}

BinomialTailEvaluator::BinomialTailEvaluator(int64_t n)
    : n_(n), log_choose_(static_cast<size_t>(n) + 1, 0.0) {
  // Independent lgamma evaluations keep the error per entry at a few ulps
  // instead of letting a running sum drift with n.
  const double log_n_factorial = std::lgamma(static_cast<double>(n) + 1.0);
  for (int64_t i = 0; i <= n; ++i) {
    log_choose_[i] = log_n_factorial -
                     std::lgamma(static_cast<double>(i) + 1.0) -
                     std::lgamma(static_cast<double>(n - i) + 1.0);
  }
}

double BinomialTailEvaluator::Tail(int64_t k, double p) const {
  if (k >= n_) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  auto term = [&](int64_t i) {
    return std::exp(log_choose_[i] + static_cast<double>(i) * log_p +
                    static_cast<double>(n_ - i) * log_q);
  };
  // Sum whichever side of k holds less mass so that a tail close to 1 is
  // formed as 1 minus a small number rather than a long sum of large terms.
  double sum = 0.0;
  if (static_cast<double>(k) < static_cast<double>(n_) * p) {
    for (int64_t i = 0; i <= k; ++i) sum += term(i);
    return std::min(sum, 1.0);
  }
  for (int64_t i = k + 1; i <= n_; ++i) sum += term(i);
  return std::max(0.0, 1.0 - sum);
}

double BinomialTailEvaluator::ClopperPearsonUpper(int64_t k,
                                                  double alpha) const {
  if (k >= n_) return 1.0;
  // Tail(k, .) is decreasing in p: Tail(k, 0) = 1 > alpha, Tail(k, 1) = 0.
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < kMaxBisectionIterations && hi - lo > kBisectionTolerance;
       ++i) {
    const double mid = 0.5 * (lo + hi);
    if (Tail(k, mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace internal

namespace {

absl::Status ValidateCounts(int64_t k, int64_t n) {
  if (n < 0 || k < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("counts must be nonnegative, got k=", k, " n=", n));
  }
  if (k > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("k=", k, " exceeds n=", n));
  }
  return absl::OkStatus();
}

absl::Status ValidateAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must lie in (0, 1), got ", alpha));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<double> NormalCdf(double x) {
  if (!std::isfinite(x)) {
    return absl::InvalidArgumentError(
        absl::StrCat("normal CDF argument must be finite, got ", x));
  }
  return internal::StandardNormalCdf(x);
}

absl::StatusOr<double> NormalQuantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("probability must lie in [0, 1], got ", p));
  }
  if (p == 0.0 || p == 1.0) {
    return absl::OutOfRangeError(
        absl::StrCat("normal quantile of ", p, " is infinite"));
  }
  return internal::StandardNormalQuantile(p);
}

absl::StatusOr<double> BinomialTail(int64_t k, int64_t n, double p) {
  if (absl::Status s = ValidateCounts(k, n); !s.ok()) return s;
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("probability must lie in [0, 1], got ", p));
  }
  return internal::BinomialTailEvaluator(n).Tail(k, p);
}

absl::StatusOr<double> ClopperPearsonUpper(int64_t k, int64_t n,
                                           double alpha) {
  if (absl::Status s = ValidateCounts(k, n); !s.ok()) return s;
  if (absl::Status s = ValidateAlpha(alpha); !s.ok()) return s;
  return internal::BinomialTailEvaluator(n).ClopperPearsonUpper(k, alpha);
}

absl::StatusOr<std::vector<double>> ClopperPearsonUpperTable(int64_t n,
                                                             double alpha) {
  if (n < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("trial count must be nonnegative, got ", n));
  }
  if (absl::Status s = ValidateAlpha(alpha); !s.ok()) return s;
  const internal::BinomialTailEvaluator evaluator(n);
  std::vector<double> table(static_cast<size_t>(n) + 1);
  for (int64_t k = 0; k <= n; ++k) {
    table[k] = evaluator.ClopperPearsonUpper(k, alpha);
  }
  return table;
}

}  // namespace dpaudit

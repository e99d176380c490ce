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

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpaudit/stats.h"

namespace dpaudit {
namespace {

constexpr double kMaxEpsilon = 1000.0;
constexpr double kMinMu = 1e-6;
constexpr double kMaxMu = 100.0;
constexpr int kMaxIterations = 200;

// Unchecked curve evaluation for mu > 0, eps >= 0. Writes delta as
// Phi(a) * (1 - exp(eps + log Phi(b) - log Phi(a))) so neither term has to
// be formed on its own.
double Delta(double epsilon, double mu) {
  const double a = -epsilon / mu + 0.5 * mu;
  const double b = -epsilon / mu - 0.5 * mu;
  const double log_a = internal::LogStandardNormalCdf(a);
  const double log_b = internal::LogStandardNormalCdf(b);
  const double log_ratio = std::min(0.0, epsilon + log_b - log_a);
  const double delta = -std::exp(log_a) * std::expm1(log_ratio);
  return std::clamp(delta, 0.0, 1.0);
}

absl::Status ValidateDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<double> GdpCompose(std::span<const double> step_mus) {
  double sum_sq = 0.0;
  for (double mu : step_mus) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      return absl::InvalidArgumentError(
          absl::StrCat("per-step mu must be finite and nonnegative, got ", mu));
    }
    sum_sq += mu * mu;
  }
  return std::sqrt(sum_sq);
}

absl::StatusOr<double> DeltaForEpsilon(double epsilon, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("mu must be finite and positive, got ", mu));
  }
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be nonnegative, got ", epsilon));
  }
  return Delta(epsilon, mu);
}

absl::StatusOr<double> MuToEpsilon(double mu, double delta) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("mu must be finite and nonnegative, got ", mu));
  }
  if (absl::Status s = ValidateDelta(delta); !s.ok()) return s;
  if (mu == 0.0 || Delta(0.0, mu) <= delta) return 0.0;
  if (Delta(kMaxEpsilon, mu) > delta) {
    return absl::OutOfRangeError(absl::StrCat(
        "epsilon for mu=", mu, " at delta=", delta, " exceeds ", kMaxEpsilon));
  }
  double lo = 0.0;
  double hi = kMaxEpsilon;
  for (int i = 0; i < kMaxIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (Delta(mid, mu) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

absl::StatusOr<double> EpsilonToMu(double epsilon, double delta) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and nonnegative, got ", epsilon));
  }
  if (absl::Status s = ValidateDelta(delta); !s.ok()) return s;
  if (epsilon == 0.0) return 0.0;
  // delta(eps, mu) increases with mu, so the target mu is where the curve
  // crosses delta at the requested epsilon.
  if (Delta(epsilon, kMaxMu) <= delta || Delta(epsilon, kMinMu) > delta) {
    return absl::OutOfRangeError(
        absl::StrCat("no mu in [", kMinMu, ", ", kMaxMu, "] reaches epsilon=",
                     epsilon, " at delta=", delta));
  }
  double lo = kMinMu;
  double hi = kMaxMu;
  for (int i = 0; i < kMaxIterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (Delta(epsilon, mid) > delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

absl::StatusOr<double> CalibrateSigma(const PrivacyBudget& budget,
                                      int64_t steps) {
  if (steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("steps must be >= 1, got ", steps));
  }
  if (!(budget.epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("target epsilon must be positive, got ", budget.epsilon));
  }
  absl::StatusOr<double> mu = EpsilonToMu(budget.epsilon, budget.delta);
  if (!mu.ok()) return mu.status();
  return std::sqrt(static_cast<double>(steps)) / *mu;
}

absl::StatusOr<double> TheoreticalEpsilon(double sigma, int64_t steps,
                                          double delta) {
  if (!(sigma > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sigma must be positive, got ", sigma));
  }
  if (steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("steps must be >= 1, got ", steps));
  }
  if (std::isinf(sigma)) return 0.0;
  return MuToEpsilon(std::sqrt(static_cast<double>(steps)) / sigma, delta);
}

absl::StatusOr<double> MuEmpirical(double fpr_upper, double fnr_upper) {
  for (double rate : {fpr_upper, fnr_upper}) {
    if (!(rate > 0.0 && rate < 1.0)) {
      return absl::FailedPreconditionError(absl::StrCat(
          "error-rate bound must lie strictly inside (0, 1), got ", rate));
    }
  }
  // Phi^{-1}(1 - x) = -Phi^{-1}(x); the reflected form avoids rounding 1 - x
  // and keeps the result symmetric in its arguments.
  const double mu = -(internal::StandardNormalQuantile(fpr_upper) +
                      internal::StandardNormalQuantile(fnr_upper));
  return std::max(0.0, mu);
}

}  // namespace dpaudit

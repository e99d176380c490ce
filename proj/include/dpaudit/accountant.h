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

// Gaussian differential privacy (mu-GDP) accounting for full-batch DP-SGD.
//
// A full-batch step with clipping norm C and noise N(0, (C sigma)^2 I) is a
// Gaussian mechanism with mu = 1 / sigma; T adaptive steps compose to
// mu = sqrt(T) / sigma. Conversion to (epsilon, delta) uses the exact GDP
// privacy curve
//
//   delta(eps) = Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2).

#ifndef DPAUDIT_ACCOUNTANT_H_
#define DPAUDIT_ACCOUNTANT_H_

#include <cstdint>
#include <span>

#include "absl/status/statusor.h"

namespace dpaudit {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 1e-5;
};

// sqrt(sum of squares). Empty input composes to 0; negative entries are an
// error.
absl::StatusOr<double> GdpCompose(std::span<const double> step_mus);

// delta(eps) on the mu-GDP privacy curve. Evaluated in log space, so it is
// accurate (and never negative) for large eps where both terms underflow.
absl::StatusOr<double> DeltaForEpsilon(double epsilon, double mu);

// Smallest epsilon >= 0 with DeltaForEpsilon(epsilon, mu) <= delta.
absl::StatusOr<double> MuToEpsilon(double mu, double delta);

// The mu whose MuToEpsilon(mu, delta) equals epsilon.
absl::StatusOr<double> EpsilonToMu(double epsilon, double delta);

// Noise multiplier sigma such that `steps` full-batch steps satisfy `budget`.
absl::StatusOr<double> CalibrateSigma(const PrivacyBudget& budget,
                                      int64_t steps);

// Forward accountant: epsilon at `delta` after `steps` full-batch steps.
absl::StatusOr<double> TheoreticalEpsilon(double sigma, int64_t steps,
                                          double delta);

// max(0, Phi^{-1}(1 - fpr_upper) - Phi^{-1}(fnr_upper)). Rates equal to 0 or
// 1 are a FailedPrecondition error; callers keep bounds inside (0, 1).
absl::StatusOr<double> MuEmpirical(double fpr_upper, double fnr_upper);

}  // namespace dpaudit

#endif  // DPAUDIT_ACCOUNTANT_H_

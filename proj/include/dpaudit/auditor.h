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

// Threshold membership test over per-model losses, Clopper-Pearson bounding
// of its error rates, and conversion to an empirical epsilon lower bound via
// mu-GDP.

#ifndef DPAUDIT_AUDITOR_H_
#define DPAUDIT_AUDITOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/strings/string_view.h"
#include "absl/status/statusor.h"

namespace dpaudit {

// Losses of the audited sample under eval-split models trained without the
// canary (`without`, O) and with it (`with`, O').
struct ObservationSet {
  std::vector<double> without;
  std::vector<double> with;
};

// kPaper: FPR = #{o in O : o >= tau} / |O|, FNR = #{o in O' : o < tau} / |O'|.
// kFlipped: FPR = #{o in O : o <= tau} / |O|, FNR = #{o in O' : o > tau} / |O'|.
enum class Direction { kPaper, kFlipped };

absl::string_view DirectionName(Direction direction);
absl::StatusOr<Direction> ParseDirection(absl::string_view name);

struct ErrorCounts {
  int64_t false_positives = 0;
  int64_t false_negatives = 0;
};

struct ErrorRates {
  double fpr = 0.0;
  double fnr = 0.0;
};

ErrorCounts CountsAtThreshold(const ObservationSet& obs, double tau,
                              Direction direction);
ErrorRates RatesAtThreshold(const ObservationSet& obs, double tau,
                            Direction direction);

struct DpEstimate {
  double mu = 0.0;
  double epsilon = 0.0;
  // Set when a bound sits at 0 or 1 and no mu can be formed.
  bool degenerate = false;
};

// mu_emp from the bounds, then the smallest epsilon consistent with it at
// `delta`.
absl::StatusOr<DpEstimate> EstimateDp(double fpr_upper, double fnr_upper,
                                      double delta);

struct AuditReport {
  double tau = 0.0;
  Direction direction = Direction::kPaper;
  double fpr = 0.0;
  double fnr = 0.0;
  double fpr_upper = 1.0;
  double fnr_upper = 1.0;
  double mu_emp = 0.0;
  double eps_emp = 0.0;
  double alpha = 0.05;
  double delta = 1e-5;
  int64_t n_without = 0;
  int64_t n_with = 0;
  int64_t false_positives = 0;
  int64_t false_negatives = 0;
  bool degenerate = false;
};

// Sweeps every candidate threshold (the midpoints between consecutive
// distinct observed values plus one sentinel below the minimum and one above
// the maximum) in both directions, bounds each rate by a one-sided
// Clopper-Pearson interval at alpha / 2 (joint confidence 1 - alpha), and
// returns the candidate with the largest epsilon. Ties go to the smaller
// tau, then to the paper direction. Each arm needs >= 2 observations.
absl::StatusOr<AuditReport> Audit(const ObservationSet& obs, double alpha,
                                  double delta);

// Key-value text, one `key = value` per line, in the fixed order:
// tau, direction, fpr, fnr, fpr_upper, fnr_upper, mu_emp, eps_emp, alpha,
// delta, n_without, n_with, false_positives, false_negatives, degenerate.
std::string FormatReport(const AuditReport& report);
absl::StatusOr<AuditReport> ParseReport(absl::string_view text);

}  // namespace dpaudit

#endif  // DPAUDIT_AUDITOR_H_

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
#include <map>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpaudit/accountant.h"
#include "dpaudit/stats.h"

namespace dpaudit {
namespace {

int64_t CountIf(const std::vector<double>& v, auto pred) {
  return std::count_if(v.begin(), v.end(), pred);
}

absl::Status ValidateObservations(const ObservationSet& obs) {
  if (obs.without.size() < 2 || obs.with.size() < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "audit needs >= 2 observations per arm, got ", obs.without.size(),
        " and ", obs.with.size()));
  }
  for (const std::vector<double>* arm : {&obs.without, &obs.with}) {
    for (double v : *arm) {
      if (!std::isfinite(v)) {
        return absl::InvalidArgumentError("observations must be finite");
      }
    }
  }
  return absl::OkStatus();
}

absl::Status ValidateProbability(absl::string_view name, double v) {
  if (!(v > 0.0 && v < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat(name, " must lie in (0, 1), got ", v));
  }
  return absl::OkStatus();
}

// Number of entries of a sorted vector strictly greater than x.
int64_t CountAbove(const std::vector<double>& sorted, double x) {
  return sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x);
}

std::string FormatDouble(double v) { return absl::StrFormat("%.17g", v); }

}  // namespace

absl::string_view DirectionName(Direction direction) {
  return direction == Direction::kPaper ? "paper" : "flipped";
}

absl::StatusOr<Direction> ParseDirection(absl::string_view name) {
  if (name == "paper") return Direction::kPaper;
  if (name == "flipped") return Direction::kFlipped;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown direction '", name, "'"));
}

ErrorCounts CountsAtThreshold(const ObservationSet& obs, double tau,
                              Direction direction) {
  if (direction == Direction::kPaper) {
    return {CountIf(obs.without, [tau](double o) { return o >= tau; }),
            CountIf(obs.with, [tau](double o) { return o < tau; })};
  }
  return {CountIf(obs.without, [tau](double o) { return o <= tau; }),
          CountIf(obs.with, [tau](double o) { return o > tau; })};
}

ErrorRates RatesAtThreshold(const ObservationSet& obs, double tau,
                            Direction direction) {
  const ErrorCounts c = CountsAtThreshold(obs, tau, direction);
  return {static_cast<double>(c.false_positives) /
              static_cast<double>(obs.without.size()),
          static_cast<double>(c.false_negatives) /
              static_cast<double>(obs.with.size())};
}

absl::StatusOr<DpEstimate> EstimateDp(double fpr_upper, double fnr_upper,
                                      double delta) {
  if (absl::Status s = ValidateProbability("delta", delta); !s.ok()) return s;
  if (!(fpr_upper > 0.0 && fpr_upper < 1.0 && fnr_upper > 0.0 &&
        fnr_upper < 1.0)) {
    return DpEstimate{.degenerate = true};
  }
  absl::StatusOr<double> mu = MuEmpirical(fpr_upper, fnr_upper);
  if (!mu.ok()) return mu.status();
  absl::StatusOr<double> eps = MuToEpsilon(*mu, delta);
  if (!eps.ok()) return eps.status();
  return DpEstimate{.mu = *mu, .epsilon = *eps};
}

absl::StatusOr<AuditReport> Audit(const ObservationSet& obs, double alpha,
                                  double delta) {
  if (absl::Status s = ValidateObservations(obs); !s.ok()) return s;
  if (absl::Status s = ValidateProbability("alpha", alpha); !s.ok()) return s;
  if (absl::Status s = ValidateProbability("delta", delta); !s.ok()) return s;

  const int64_t n_without = static_cast<int64_t>(obs.without.size());
  const int64_t n_with = static_cast<int64_t>(obs.with.size());
  // Union bound over the two rates.
  const double alpha_each = alpha / 2.0;
  absl::StatusOr<std::vector<double>> upper_without =
      ClopperPearsonUpperTable(n_without, alpha_each);
  if (!upper_without.ok()) return upper_without.status();
  absl::StatusOr<std::vector<double>> upper_with =
      n_with == n_without ? upper_without
                          : ClopperPearsonUpperTable(n_with, alpha_each);
  if (!upper_with.ok()) return upper_with.status();

  std::vector<double> without = obs.without;
  std::vector<double> with = obs.with;
  std::sort(without.begin(), without.end());
  std::sort(with.begin(), with.end());
  std::vector<double> values;
  values.reserve(without.size() + with.size());
  std::merge(without.begin(), without.end(), with.begin(), with.end(),
             std::back_inserter(values));
  values.erase(std::unique(values.begin(), values.end()), values.end());

  AuditReport best{.alpha = alpha,
                   .delta = delta,
                   .n_without = n_without,
                   .n_with = n_with};
  bool have_best = false;
  // Candidate c separates values[0..c-1] from values[c..]; c = 0 and
  // c = values.size() are the sentinels. Counts come from the split position
  // rather than the rounded midpoint.
  for (size_t c = 0; c <= values.size(); ++c) {
    double tau;
    if (c == 0) {
      tau = values.front() - 1.0;
    } else if (c == values.size()) {
      tau = values.back() + 1.0;
    } else {
      tau = values[c - 1] + 0.5 * (values[c] - values[c - 1]);
    }
    // Observations strictly above the split.
    const int64_t above_without =
        c == 0 ? n_without : CountAbove(without, values[c - 1]);
    const int64_t above_with = c == 0 ? n_with : CountAbove(with, values[c - 1]);
    for (Direction direction : {Direction::kPaper, Direction::kFlipped}) {
      ErrorCounts counts;
      if (direction == Direction::kPaper) {
        counts = {above_without, n_with - above_with};
      } else {
        counts = {n_without - above_without, above_with};
      }
      const double fpr_upper = (*upper_without)[counts.false_positives];
      const double fnr_upper = (*upper_with)[counts.false_negatives];
      double mu = 0.0;
      const bool degenerate = !(fpr_upper < 1.0 && fnr_upper < 1.0);
      if (!degenerate) {
        absl::StatusOr<double> m = MuEmpirical(fpr_upper, fnr_upper);
        if (!m.ok()) return m.status();
        mu = *m;
      }
      // epsilon is strictly increasing in mu, so the maximum-epsilon
      // candidate is the maximum-mu candidate.
      if (!have_best || mu > best.mu_emp) {
        have_best = true;
        best.tau = tau;
        best.direction = direction;
        best.false_positives = counts.false_positives;
        best.false_negatives = counts.false_negatives;
        best.fpr = static_cast<double>(counts.false_positives) /
                   static_cast<double>(n_without);
        best.fnr = static_cast<double>(counts.false_negatives) /
                   static_cast<double>(n_with);
        best.fpr_upper = fpr_upper;
        best.fnr_upper = fnr_upper;
        best.mu_emp = mu;
        best.degenerate = degenerate;
      }
    }
  }
  absl::StatusOr<double> eps = MuToEpsilon(best.mu_emp, delta);
  if (!eps.ok()) return eps.status();
  best.eps_emp = *eps;
  return best;
}

std::string FormatReport(const AuditReport& r) {
  std::string out;
  absl::StrAppend(&out, "tau = ", FormatDouble(r.tau), "\n");
  absl::StrAppend(&out, "direction = ", DirectionName(r.direction), "\n");
  absl::StrAppend(&out, "fpr = ", FormatDouble(r.fpr), "\n");
  absl::StrAppend(&out, "fnr = ", FormatDouble(r.fnr), "\n");
  absl::StrAppend(&out, "fpr_upper = ", FormatDouble(r.fpr_upper), "\n");
  absl::StrAppend(&out, "fnr_upper = ", FormatDouble(r.fnr_upper), "\n");
  absl::StrAppend(&out, "mu_emp = ", FormatDouble(r.mu_emp), "\n");
  absl::StrAppend(&out, "eps_emp = ", FormatDouble(r.eps_emp), "\n");
  absl::StrAppend(&out, "alpha = ", FormatDouble(r.alpha), "\n");
  absl::StrAppend(&out, "delta = ", FormatDouble(r.delta), "\n");
  absl::StrAppend(&out, "n_without = ", r.n_without, "\n");
  absl::StrAppend(&out, "n_with = ", r.n_with, "\n");
  absl::StrAppend(&out, "false_positives = ", r.false_positives, "\n");
  absl::StrAppend(&out, "false_negatives = ", r.false_negatives, "\n");
  absl::StrAppend(&out, "degenerate = ", r.degenerate ? 1 : 0, "\n");
  return out;
}

absl::StatusOr<AuditReport> ParseReport(absl::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    line = absl::StripAsciiWhitespace(line);
    if (line.empty() || line.front() == '#') continue;
    std::pair<absl::string_view, absl::string_view> parts =
        absl::StrSplit(line, absl::MaxSplits('=', 1));
    kv[std::string(absl::StripAsciiWhitespace(parts.first))] =
        std::string(absl::StripAsciiWhitespace(parts.second));
  }
  AuditReport r;
  auto get_double = [&](absl::string_view key, double* out) -> absl::Status {
    auto it = kv.find(key);
    if (it == kv.end() || !absl::SimpleAtod(it->second, out)) {
      return absl::InvalidArgumentError(
          absl::StrCat("report field '", key, "' missing or malformed"));
    }
    return absl::OkStatus();
  };
  auto get_int = [&](absl::string_view key, int64_t* out) -> absl::Status {
    auto it = kv.find(key);
    if (it == kv.end() || !absl::SimpleAtoi(it->second, out)) {
      return absl::InvalidArgumentError(
          absl::StrCat("report field '", key, "' missing or malformed"));
    }
    return absl::OkStatus();
  };
  for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
           {"tau", &r.tau},
           {"fpr", &r.fpr},
           {"fnr", &r.fnr},
           {"fpr_upper", &r.fpr_upper},
           {"fnr_upper", &r.fnr_upper},
           {"mu_emp", &r.mu_emp},
           {"eps_emp", &r.eps_emp},
           {"alpha", &r.alpha},
           {"delta", &r.delta}}) {
    if (absl::Status s = get_double(key, field); !s.ok()) return s;
  }
  int64_t degenerate = 0;
  for (auto [key, field] : std::initializer_list<std::pair<const char*, int64_t*>>{
           {"n_without", &r.n_without},
           {"n_with", &r.n_with},
           {"false_positives", &r.false_positives},
           {"false_negatives", &r.false_negatives},
           {"degenerate", &degenerate}}) {
    if (absl::Status s = get_int(key, field); !s.ok()) return s;
  }
  r.degenerate = degenerate != 0;
  auto dir = kv.find("direction");
  if (dir == kv.end()) {
    return absl::InvalidArgumentError("report field 'direction' missing");
  }
  absl::StatusOr<Direction> direction = ParseDirection(dir->second);
  if (!direction.ok()) return direction.status();
  r.direction = *direction;
  return r;
}

}  // namespace dpaudit

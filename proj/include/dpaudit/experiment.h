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

// Audit orchestration and report emission on top of a trained ensemble.

#ifndef DPAUDIT_EXPERIMENT_H_
#define DPAUDIT_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/auditor.h"
#include "dpaudit/config.h"
#include "dpaudit/crafting.h"
#include "dpaudit/ensemble.h"

namespace dpaudit {

// Which sample is audited: the canary itself, or a sample crafted from it.
struct SampleSource {
  std::optional<CraftObjective> objective;  // empty = canary

  std::string Name() const;
  static absl::StatusOr<SampleSource> Parse(absl::string_view name);
  static SampleSource Canary() { return {}; }
  static SampleSource Crafted(CraftObjective o) { return {o}; }
};

struct AuditOutcome {
  std::string source;
  Sample sample;
  std::optional<CraftResult> craft;
  ObservationSet observations;
  AuditReport report;
};

// Crafts `source` on the craft split (if it is not the canary), measures
// losses on the eval split, and runs the audit. With `write_outputs`, writes
// audit_<source>.txt, observations_<source>.csv, histogram_<source>.csv and
// sample_<source>.sample into the manifest directory.
absl::StatusOr<AuditOutcome> RunAudit(const EnsembleManifest& manifest,
                                      const SampleSource& source,
                                      const ExperimentConfig& cfg,
                                      bool write_outputs = true);

// Writes audit_<source>.txt, observations_<source>.csv,
// histogram_<source>.csv and sample_<source>.sample into the manifest
// directory, where <source> is outcome.source.
absl::Status WriteAuditOutputs(const EnsembleManifest& manifest,
                               const AuditOutcome& outcome);

// Audits a fixed sample (e.g. one crafted earlier) on the eval split.
absl::StatusOr<AuditOutcome> AuditSample(const EnsembleManifest& manifest,
                                         std::string source_name,
                                         const Sample& sample,
                                         const ExperimentConfig& cfg);

// One row of the results table.
struct ReportRow {
  std::string objective;  // SampleSource::Name()
  double eps_target = 0.0;
  uint64_t seed = 0;
  AuditReport report;
  ObservationSet observations;  // for the histogram file; may be empty
};

inline constexpr absl::string_view kReportHeader =
    "objective,eps_target,N_eval,fpr_bar,fnr_bar,mu_emp,eps_emp,tau,direction,"
    "seed";
inline constexpr absl::string_view kHistogramHeader =
    "bin_lo,bin_hi,count_without,count_with";

// Equal-width bins over [min, max] of both arms; the last bin is closed.
std::string FormatHistogram(const ObservationSet& obs, int bins = 20);

// Writes `path` with rows sorted by (objective, eps_target, seed). Each
// (objective, eps_target) group with two or more runs is followed by a
// `mean` and a `std` row (seed column holds the label). Also writes
// <stem>_hist_<objective>_eps<eps>_seed<seed>.csv next to `path` for every
// row that carries observations.
absl::Status EmitReport(std::vector<ReportRow> rows, const std::string& path);

// Full pipeline for `runs` base seeds (cfg.base_seed + r): train an ensemble
// in <output_dir>/run_<r>, audit every source, then emit report.csv.
absl::StatusOr<std::vector<ReportRow>> RunExperiment(
    const ExperimentConfig& cfg, const std::vector<SampleSource>& sources,
    int runs);

}  // namespace dpaudit

#endif  // DPAUDIT_EXPERIMENT_H_

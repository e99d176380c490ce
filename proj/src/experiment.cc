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

#include "dpaudit/experiment.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <utility>

#include "absl/strings/string_view.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpaudit/model_io.h"

namespace dpaudit {
namespace {

namespace fs = std::filesystem;

std::string FormatDouble(double v) { return absl::StrFormat("%.17g", v); }

std::string FormatObservations(const ObservationSet& obs) {
  std::string out = "arm,position,loss\n";
  for (size_t i = 0; i < obs.without.size(); ++i) {
    absl::StrAppend(&out, "without,", i, ",", FormatDouble(obs.without[i]), "\n");
  }
  for (size_t i = 0; i < obs.with.size(); ++i) {
    absl::StrAppend(&out, "with,", i, ",", FormatDouble(obs.with[i]), "\n");
  }
  return out;
}

std::vector<ModelRecord> Truncate(std::vector<ModelRecord> records,
                                  int64_t limit) {
  if (limit > 0 && static_cast<int64_t>(records.size()) > limit) {
    records.resize(static_cast<size_t>(limit));
  }
  return records;
}

std::string ReportLine(const ReportRow& row) {
  const AuditReport& r = row.report;
  return absl::StrCat(row.objective, ",", FormatDouble(row.eps_target), ",",
                      r.n_without + r.n_with, ",", FormatDouble(r.fpr_upper),
                      ",", FormatDouble(r.fnr_upper), ",",
                      FormatDouble(r.mu_emp), ",", FormatDouble(r.eps_emp), ",",
                      FormatDouble(r.tau), ",", DirectionName(r.direction), ",",
                      row.seed);
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

Summary Summarize(const std::vector<double>& v) {
  Summary s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) s.std += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(s.std / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

std::string SampleSource::Name() const {
  return objective.has_value() ? std::string(ObjectiveName(*objective))
                               : "canary";
}

absl::StatusOr<SampleSource> SampleSource::Parse(absl::string_view name) {
  if (name == "canary") return Canary();
  absl::StatusOr<CraftObjective> o = ParseObjective(name);
  if (!o.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "unknown sample source '", name,
        "' (expected canary, l2, bhattacharyya or fisher)"));
  }
  return Crafted(*o);
}

absl::StatusOr<AuditOutcome> AuditSample(const EnsembleManifest& manifest,
                                         std::string source_name,
                                         const Sample& sample,
                                         const ExperimentConfig& cfg) {
  const std::vector<ModelRecord> eval_without = Truncate(
      SelectModels(manifest, Arm::kWithout, Split::kEval), cfg.eval_limit);
  const std::vector<ModelRecord> eval_with = Truncate(
      SelectModels(manifest, Arm::kWith, Split::kEval), cfg.eval_limit);
  if (eval_without.empty() || eval_with.empty()) {
    return absl::FailedPreconditionError(
        "audit needs at least one successfully trained eval model per arm");
  }
  AuditOutcome outcome{.source = std::move(source_name), .sample = sample};
  for (auto [records, losses] :
       {std::pair{&eval_without, &outcome.observations.without},
        std::pair{&eval_with, &outcome.observations.with}}) {
    absl::StatusOr<std::vector<ModelParams>> models =
        LoadModels(manifest, *records);
    if (!models.ok()) return models.status();
    absl::StatusOr<std::vector<double>> l = EnsembleLosses(*models, sample);
    if (!l.ok()) return l.status();
    *losses = *std::move(l);
  }
  absl::StatusOr<AuditReport> report =
      Audit(outcome.observations, cfg.alpha, cfg.delta);
  if (!report.ok()) return report.status();
  outcome.report = *report;
  return outcome;
}

absl::Status WriteAuditOutputs(const EnsembleManifest& manifest,
                               const AuditOutcome& outcome) {
  const fs::path dir(manifest.directory);
  const std::string& name = outcome.source;
  std::string report_text = FormatReport(outcome.report);
  absl::StrAppend(&report_text, "source = ", name, "\n");
  if (outcome.craft.has_value()) {
    absl::StrAppend(&report_text, "craft_initial_objective = ",
                    FormatDouble(outcome.craft->initial_objective), "\n",
                    "craft_best_objective = ",
                    FormatDouble(outcome.craft->best_objective), "\n",
                    "craft_best_step = ", outcome.craft->best_step, "\n");
  }
  for (auto [file, bytes] : std::initializer_list<std::pair<std::string, std::string>>{
           {absl::StrCat("audit_", name, ".txt"), report_text},
           {absl::StrCat("observations_", name, ".csv"),
            FormatObservations(outcome.observations)},
           {absl::StrCat("histogram_", name, ".csv"),
            FormatHistogram(outcome.observations)},
           {absl::StrCat("sample_", name, ".sample"),
            EncodeSample(outcome.sample)}}) {
    if (absl::Status s = WriteFileBytes((dir / file).string(), bytes); !s.ok()) {
      return s;
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<AuditOutcome> RunAudit(const EnsembleManifest& manifest,
                                      const SampleSource& source,
                                      const ExperimentConfig& cfg,
                                      bool write_outputs) {
  const std::vector<ModelRecord> craft_without =
      SelectModels(manifest, Arm::kWithout, Split::kCraft);
  const std::vector<ModelRecord> craft_with =
      SelectModels(manifest, Arm::kWith, Split::kCraft);
  std::set<int64_t> craft_indices;
  for (const auto* arm : {&craft_without, &craft_with}) {
    for (const ModelRecord& r : *arm) craft_indices.insert(r.index);
  }
  for (const ModelRecord& r : manifest.models) {
    if (r.split == Split::kEval && craft_indices.contains(r.index)) {
      return absl::InternalError(
          absl::StrCat("model ", r.index, " is in both craft and eval splits"));
    }
  }

  absl::StatusOr<Sample> canary = ReadSampleFile(
      (fs::path(manifest.directory) / manifest.canary_path).string());
  if (!canary.ok()) return canary.status();

  Sample audited = *canary;
  std::optional<CraftResult> craft;
  if (source.objective.has_value()) {
    if (craft_without.empty() || craft_with.empty()) {
      return absl::FailedPreconditionError(
          "crafting needs at least one craft model per arm");
    }
    absl::StatusOr<std::vector<ModelParams>> models_without =
        LoadModels(manifest, craft_without);
    if (!models_without.ok()) return models_without.status();
    absl::StatusOr<std::vector<ModelParams>> models_with =
        LoadModels(manifest, craft_with);
    if (!models_with.ok()) return models_with.status();
    absl::StatusOr<CraftResult> crafted =
        CraftAdversarial(*models_without, *models_with, *canary,
                         MakeCraftConfig(cfg, *source.objective));
    if (!crafted.ok()) return crafted.status();
    audited = crafted->sample;
    craft = *std::move(crafted);
  }

  absl::StatusOr<AuditOutcome> outcome =
      AuditSample(manifest, source.Name(), audited, cfg);
  if (!outcome.ok()) return outcome.status();
  outcome->craft = std::move(craft);

  if (write_outputs) {
    if (absl::Status s = WriteAuditOutputs(manifest, *outcome); !s.ok()) {
      return s;
    }
  }
  return outcome;
}

std::string FormatHistogram(const ObservationSet& obs, int bins) {
  std::string out = absl::StrCat(kHistogramHeader, "\n");
  if (obs.without.empty() && obs.with.empty()) return out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* arm : {&obs.without, &obs.with}) {
    for (double v : *arm) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) bins = 1;
  const double width = bins > 1 ? (hi - lo) / bins : 0.0;
  std::vector<int64_t> without(bins, 0), with(bins, 0);
  auto bin_of = [&](double v) {
    if (width == 0.0) return 0;
    return std::min(bins - 1, static_cast<int>((v - lo) / width));
  };
  for (double v : obs.without) ++without[bin_of(v)];
  for (double v : obs.with) ++with[bin_of(v)];
  for (int b = 0; b < bins; ++b) {
    const double edge_lo = lo + b * width;
    const double edge_hi = b + 1 == bins ? hi : lo + (b + 1) * width;
    absl::StrAppend(&out, FormatDouble(edge_lo), ",", FormatDouble(edge_hi), ",",
                    without[b], ",", with[b], "\n");
  }
  return out;
}

absl::Status EmitReport(std::vector<ReportRow> rows, const std::string& path) {
  if (rows.empty()) return absl::InvalidArgumentError("no report rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) {
                     return std::tie(a.objective, a.eps_target, a.seed) <
                            std::tie(b.objective, b.eps_target, b.seed);
                   });
  std::string out = absl::StrCat(kReportHeader, "\n");
  size_t begin = 0;
  while (begin < rows.size()) {
    size_t end = begin;
    while (end < rows.size() && rows[end].objective == rows[begin].objective &&
           rows[end].eps_target == rows[begin].eps_target) {
      absl::StrAppend(&out, ReportLine(rows[end]), "\n");
      ++end;
    }
    if (end - begin >= 2) {
      std::vector<std::vector<double>> cols(6);
      for (size_t i = begin; i < end; ++i) {
        const AuditReport& r = rows[i].report;
        const double values[] = {static_cast<double>(r.n_without + r.n_with),
                                 r.fpr_upper, r.fnr_upper, r.mu_emp, r.eps_emp,
                                 r.tau};
        for (size_t c = 0; c < cols.size(); ++c) cols[c].push_back(values[c]);
      }
      std::vector<Summary> s;
      for (const auto& c : cols) s.push_back(Summarize(c));
      for (bool mean : {true, false}) {
        absl::StrAppend(&out, rows[begin].objective, ",",
                        FormatDouble(rows[begin].eps_target));
        for (const Summary& x : s) {
          absl::StrAppend(&out, ",", FormatDouble(mean ? x.mean : x.std));
        }
        absl::StrAppend(&out, ",,", mean ? "mean" : "std", "\n");
      }
    }
    begin = end;
  }
  if (absl::Status st = WriteFileBytes(path, out); !st.ok()) return st;

  const fs::path base(path);
  const fs::path dir = base.parent_path();
  const std::string stem = base.stem().string();
  for (const ReportRow& row : rows) {
    if (row.observations.without.empty() && row.observations.with.empty()) {
      continue;
    }
    const std::string name =
        absl::StrFormat("%s_hist_%s_eps%g_seed%d.csv", stem, row.objective,
                        row.eps_target, row.seed);
    if (absl::Status st =
            WriteFileBytes((dir / name).string(), FormatHistogram(row.observations));
        !st.ok()) {
      return st;
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<ReportRow>> RunExperiment(
    const ExperimentConfig& cfg, const std::vector<SampleSource>& sources,
    int runs) {
  if (runs < 1) return absl::InvalidArgumentError("runs must be >= 1");
  if (sources.empty()) return absl::InvalidArgumentError("no sample sources");
  std::vector<ReportRow> rows;
  for (int r = 0; r < runs; ++r) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.base_seed = cfg.base_seed + static_cast<uint64_t>(r);
    run_cfg.output_dir =
        (fs::path(cfg.output_dir) / absl::StrCat("run_", r)).string();
    absl::StatusOr<EnsembleManifest> manifest = RunEnsemble(run_cfg);
    if (!manifest.ok()) return manifest.status();
    const double eps_target = cfg.noise_multiplier >= 0.0
                                  ? manifest->theoretical_epsilon
                                  : cfg.target_epsilon;
    for (const SampleSource& source : sources) {
      absl::StatusOr<AuditOutcome> outcome = RunAudit(*manifest, source, run_cfg);
      if (!outcome.ok()) return outcome.status();
      rows.push_back(ReportRow{.objective = source.Name(),
                               .eps_target = eps_target,
                               .seed = run_cfg.base_seed,
                               .report = outcome->report,
                               .observations = outcome->observations});
    }
  }
  if (absl::Status s = EmitReport(
          rows, (fs::path(cfg.output_dir) / "report.csv").string());
      !s.ok()) {
    return s;
  }
  return rows;
}

}  // namespace dpaudit

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

// Command-line entry point. Every ExperimentConfig key is also a flag;
// precedence is defaults < --preset < --config file < individual flags.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dpaudit/accountant.h"
#include "dpaudit/auditor.h"
#include "dpaudit/config.h"
#include "dpaudit/crafting.h"
#include "dpaudit/ensemble.h"
#include "dpaudit/experiment.h"
#include "dpaudit/model_io.h"

namespace {

namespace fs = std::filesystem;
using dpaudit::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Configuration mistakes are the caller's fault; everything else is a
// runtime or numerical failure.
int ExitCodeFor(const absl::Status& s) {
  if (s.ok()) return kExitOk;
  std::fprintf(stderr, "dpaudit: %s\n", s.ToString().c_str());
  return absl::IsInvalidArgument(s) || absl::IsUnimplemented(s) ? kExitUsage
                                                                : kExitRuntime;
}

struct Flags {
  std::string config_path;
  std::string preset;
  std::map<std::string, std::string> overrides;
};

absl::StatusOr<ExperimentConfig> ResolveConfig(const Flags& flags) {
  ExperimentConfig cfg;
  if (flags.preset == "paper-mnist") {
    cfg = dpaudit::PaperMnistPreset();
  } else if (!flags.preset.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown preset '", flags.preset, "'"));
  }
  if (!flags.config_path.empty()) {
    absl::StatusOr<std::string> text = dpaudit::ReadFileBytes(flags.config_path);
    if (!text.ok()) return absl::InvalidArgumentError(text.status().message());
    if (absl::Status s = dpaudit::ApplyConfigText(cfg, *text); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(flags.config_path, ": ", s.message()));
    }
  }
  for (const auto& [key, value] : flags.overrides) {
    if (absl::Status s = dpaudit::SetConfigValue(cfg, key, value); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("--", key, ": ", s.message()));
    }
  }
  if (absl::Status s = dpaudit::ValidateExperimentConfig(cfg); !s.ok()) {
    return absl::InvalidArgumentError(s.message());
  }
  return cfg;
}

absl::StatusOr<std::vector<dpaudit::SampleSource>> ParseSources(
    const std::string& list) {
  std::vector<dpaudit::SampleSource> out;
  for (absl::string_view name : absl::StrSplit(list, ',', absl::SkipEmpty())) {
    absl::StatusOr<dpaudit::SampleSource> s = dpaudit::SampleSource::Parse(name);
    if (!s.ok()) return s.status();
    out.push_back(*s);
  }
  if (out.empty()) return absl::InvalidArgumentError("no sample sources given");
  return out;
}

absl::Status Calibrate(const ExperimentConfig& cfg) {
  absl::StatusOr<double> sigma = cfg.noise_multiplier >= 0.0
                                     ? absl::StatusOr<double>(cfg.noise_multiplier)
                                     : dpaudit::CalibrateSigma(
                                           {cfg.target_epsilon, cfg.delta},
                                           cfg.iterations);
  if (!sigma.ok()) return sigma.status();
  absl::StatusOr<double> eps =
      dpaudit::TheoreticalEpsilon(*sigma, cfg.iterations, cfg.delta);
  if (!eps.ok()) return eps.status();
  absl::PrintF("sigma = %.17g\nmu = %.17g\nepsilon = %.17g\ndelta = %.17g\n"
               "iterations = %d\n",
               *sigma, std::sqrt(static_cast<double>(cfg.iterations)) / *sigma,
               *eps, cfg.delta, cfg.iterations);
  return absl::OkStatus();
}

absl::Status TrainEnsemble(const ExperimentConfig& cfg) {
  absl::StatusOr<dpaudit::EnsembleManifest> m = dpaudit::RunEnsemble(cfg);
  if (!m.ok()) return m.status();
  int64_t failed = 0;
  for (const dpaudit::ModelRecord& r : m->models) failed += r.ok ? 0 : 1;
  absl::PrintF("directory = %s\nmodels = %d\nfailed = %d\nsigma = %.17g\n"
               "epsilon = %.17g\n",
               m->directory, m->models.size(), failed, m->noise_multiplier,
               m->theoretical_epsilon);
  return failed == 0 ? absl::OkStatus()
                     : absl::InternalError(absl::StrCat(
                           failed, " models failed; see manifest.csv"));
}

absl::Status Craft(const ExperimentConfig& cfg, const std::string& objective) {
  absl::StatusOr<dpaudit::CraftObjective> o = dpaudit::ParseObjective(objective);
  if (!o.ok()) return absl::InvalidArgumentError(o.status().message());
  absl::StatusOr<dpaudit::EnsembleManifest> m =
      dpaudit::ReadManifest(cfg.output_dir);
  if (!m.ok()) return m.status();
  std::vector<std::vector<dpaudit::ModelParams>> arms;
  for (dpaudit::Arm arm : {dpaudit::Arm::kWithout, dpaudit::Arm::kWith}) {
    absl::StatusOr<std::vector<dpaudit::ModelParams>> models =
        dpaudit::LoadModels(*m, dpaudit::SelectModels(*m, arm,
                                                      dpaudit::Split::kCraft));
    if (!models.ok()) return models.status();
    arms.push_back(*std::move(models));
  }
  absl::StatusOr<dpaudit::Sample> canary =
      dpaudit::ReadSampleFile((fs::path(m->directory) / m->canary_path).string());
  if (!canary.ok()) return canary.status();
  absl::StatusOr<dpaudit::CraftResult> r = dpaudit::CraftAdversarial(
      arms[0], arms[1], *canary, dpaudit::MakeCraftConfig(cfg, *o));
  if (!r.ok()) return r.status();
  const std::string path =
      (fs::path(m->directory) / absl::StrCat("sample_", objective, ".sample"))
          .string();
  if (absl::Status s = dpaudit::WriteSampleFile(path, r->sample); !s.ok()) {
    return s;
  }
  absl::PrintF("sample = %s\ninitial_objective = %.17g\nbest_objective = %.17g\n"
               "best_step = %d\n",
               path, r->initial_objective, r->best_objective, r->best_step);
  return absl::OkStatus();
}

absl::Status Audit(const ExperimentConfig& cfg, const std::string& source,
                   const std::string& sample_path) {
  absl::StatusOr<dpaudit::EnsembleManifest> m =
      dpaudit::ReadManifest(cfg.output_dir);
  if (!m.ok()) return m.status();
  absl::StatusOr<dpaudit::AuditOutcome> outcome;
  if (!sample_path.empty()) {
    absl::StatusOr<dpaudit::Sample> sample = dpaudit::ReadSampleFile(sample_path);
    if (!sample.ok()) return sample.status();
    // sample_fisher.sample is reported as "fisher".
    std::string name = fs::path(sample_path).stem().string();
    if (absl::StartsWith(name, "sample_")) name = name.substr(7);
    if (name.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot name an audit after '", sample_path, "'"));
    }
    outcome = dpaudit::AuditSample(*m, name, *sample, cfg);
    if (outcome.ok()) {
      if (absl::Status s = dpaudit::WriteAuditOutputs(*m, *outcome); !s.ok()) {
        return s;
      }
    }
  } else {
    absl::StatusOr<dpaudit::SampleSource> s = dpaudit::SampleSource::Parse(source);
    if (!s.ok()) return s.status();
    outcome = dpaudit::RunAudit(*m, *s, cfg);
  }
  if (!outcome.ok()) return outcome.status();
  absl::PrintF("%s", dpaudit::FormatReport(outcome->report));
  return absl::OkStatus();
}

// Collects audit_<source>.txt files from finished ensemble directories.
absl::Status Report(const std::vector<std::string>& inputs,
                    const std::string& out, double eps_target) {
  std::vector<dpaudit::ReportRow> rows;
  for (const std::string& dir : inputs) {
    absl::StatusOr<dpaudit::EnsembleManifest> m = dpaudit::ReadManifest(dir);
    if (!m.ok()) return m.status();
    std::vector<fs::path> reports;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (absl::StartsWith(name, "audit_") && absl::EndsWith(name, ".txt")) {
        reports.push_back(e.path());
      }
    }
    std::sort(reports.begin(), reports.end());
    for (const fs::path& p : reports) {
      absl::StatusOr<std::string> text = dpaudit::ReadFileBytes(p.string());
      if (!text.ok()) return text.status();
      absl::StatusOr<dpaudit::AuditReport> r = dpaudit::ParseReport(*text);
      if (!r.ok()) {
        return absl::DataLossError(absl::StrCat(p.string(), ": ", r.status().message()));
      }
      std::string name = p.stem().string().substr(6);
      rows.push_back(dpaudit::ReportRow{
          .objective = std::move(name),
          .eps_target = eps_target > 0.0 ? eps_target : m->theoretical_epsilon,
          .seed = m->base_seed,
          .report = *r});
    }
  }
  if (rows.empty()) {
    return absl::InvalidArgumentError("no audit_*.txt reports in the inputs");
  }
  if (absl::Status s = dpaudit::EmitReport(rows, out); !s.ok()) return s;
  absl::PrintF("report = %s\nrows = %d\n", out, rows.size());
  return absl::OkStatus();
}

absl::Status EndToEnd(const ExperimentConfig& cfg, const std::string& sources,
                      int runs) {
  absl::StatusOr<std::vector<dpaudit::SampleSource>> s = ParseSources(sources);
  if (!s.ok()) return s.status();
  absl::StatusOr<std::vector<dpaudit::ReportRow>> rows =
      dpaudit::RunExperiment(cfg, *s, runs);
  if (!rows.ok()) return rows.status();
  for (const dpaudit::ReportRow& r : *rows) {
    absl::PrintF("%-14s seed=%-4d eps_emp=%.4f mu_emp=%.4f\n", r.objective,
                 r.seed, r.report.eps_emp, r.report.mu_emp);
  }
  absl::PrintF("report = %s\n", (fs::path(cfg.output_dir) / "report.csv").string());
  return absl::OkStatus();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy auditing of DP-SGD with crafted adversarial samples"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config_path, "key = value configuration file");
  app.add_option("--preset", flags.preset, "start from a named preset (paper-mnist)");
  for (const dpaudit::ConfigKey& key : dpaudit::ConfigKeys()) {
    app.add_option_function<std::string>(
           "--" + key.name,
           [&flags, name = key.name](const std::string& v) {
             flags.overrides[name] = v;
           },
           key.help)
        ->group("Experiment");
  }

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "print sigma for target_epsilon, delta, iterations");
  CLI::App* train =
      app.add_subcommand("train-ensemble", "train both arms into output_dir");
  std::string objective;
  CLI::App* craft =
      app.add_subcommand("craft", "craft an audit sample from the craft split");
  craft->add_option("--objective", objective, "l2, bhattacharyya or fisher")
      ->required();
  std::string source = "canary";
  std::string sample_path;
  CLI::App* audit = app.add_subcommand("audit", "audit a sample on the eval split");
  audit->add_option("--source", source, "canary, l2, bhattacharyya or fisher");
  audit->add_option("--sample", sample_path, "audit this sample file instead");
  std::vector<std::string> inputs;
  std::string out = "report.csv";
  double eps_target = 0.0;
  CLI::App* report =
      app.add_subcommand("report", "merge audit reports of several ensembles");
  report->add_option("--inputs", inputs, "ensemble directories")->required();
  report->add_option("--out", out, "report CSV path");
  report->add_option("--eps-target", eps_target,
                     "eps_target column (default: each manifest's epsilon)");
  std::string sources = "canary,l2,bhattacharyya,fisher";
  int runs = 1;
  CLI::App* e2e = app.add_subcommand("e2e", "train, craft, audit and report");
  e2e->add_option("--sources", sources, "comma-separated sample sources");
  e2e->add_option("--runs", runs, "independent runs with base_seed + r")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*report) return ExitCodeFor(Report(inputs, out, eps_target));

  absl::StatusOr<ExperimentConfig> cfg = ResolveConfig(flags);
  if (!cfg.ok()) return ExitCodeFor(cfg.status());
  if (*calibrate) return ExitCodeFor(Calibrate(*cfg));
  if (*train) return ExitCodeFor(TrainEnsemble(*cfg));
  if (*craft) return ExitCodeFor(Craft(*cfg, objective));
  if (*audit) return ExitCodeFor(Audit(*cfg, source, sample_path));
  return ExitCodeFor(EndToEnd(*cfg, sources, runs));
}

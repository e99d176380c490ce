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

#include "dpaudit/ensemble.h"

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <limits>
#include <utility>

#include "absl/strings/string_view.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_replace.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpaudit/accountant.h"
#include "dpaudit/crafting.h"
#include "dpaudit/dataset.h"
#include "dpaudit/model_io.h"
#include "dpaudit/noise_stream.h"
#include "dpaudit/parallel.h"

namespace dpaudit {
namespace {

constexpr absl::string_view kManifestFile = "manifest.csv";
constexpr absl::string_view kManifestHeader =
    "index,arm,arm_index,split,seed,path,final_step_loss,status,error";

std::string FormatDouble(double v) { return absl::StrFormat("%.17g", v); }

std::string Sanitize(absl::string_view s) {
  return absl::StrReplaceAll(s, {{",", ";"}, {"\n", " "}, {"\r", " "}});
}

absl::Status ManifestError(int line, absl::string_view what) {
  return absl::InvalidArgumentError(
      absl::StrCat("manifest line ", line, ": ", what));
}

}  // namespace

absl::string_view ArmName(Arm arm) {
  return arm == Arm::kWithout ? "without" : "with";
}

absl::string_view SplitName(Split split) {
  return split == Split::kCraft ? "craft" : "eval";
}

int64_t CraftCount(int64_t models_per_arm, double craft_fraction) {
  return static_cast<int64_t>(
      std::ceil(craft_fraction * static_cast<double>(models_per_arm)));
}

uint64_t ModelSeed(uint64_t base_seed, Arm arm, int64_t arm_index) {
  return DeriveSeed(base_seed, static_cast<uint64_t>(arm),
                    static_cast<uint64_t>(arm_index));
}

absl::StatusOr<Dataset> LoadDataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "mnist") {
    return LoadMnistIdx(cfg.mnist_images, cfg.mnist_labels,
                        static_cast<size_t>(cfg.mnist_limit));
  }
  if (cfg.synthetic_dim < 1 || cfg.synthetic_classes < 2 ||
      cfg.synthetic_size < 1) {
    return absl::InvalidArgumentError("invalid synthetic dataset parameters");
  }
  return MakeSynthetic(static_cast<size_t>(cfg.synthetic_dim),
                       static_cast<size_t>(cfg.synthetic_classes),
                       static_cast<size_t>(cfg.synthetic_size),
                       cfg.synthetic_seed);
}

absl::StatusOr<ModelArch> ResolveArch(const ExperimentConfig& cfg,
                                      const Dataset& data) {
  if (data.empty()) return absl::InvalidArgumentError("dataset is empty");
  int max_label = 0;
  for (const Sample& s : data) max_label = std::max(max_label, s.label);
  size_t classes = static_cast<size_t>(max_label) + 1;
  if (cfg.dataset == "synthetic") {
    classes = static_cast<size_t>(cfg.synthetic_classes);
  } else if (cfg.dataset == "mnist") {
    classes = std::max<size_t>(classes, 10);
  }
  if (cfg.canary_label < 0 ||
      static_cast<size_t>(cfg.canary_label) >= classes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "canary label ", cfg.canary_label, " outside [0, ", classes, ")"));
  }
  const Shape& input = data.front().x.shape();
  if (cfg.arch == "auto") return DefaultArch(input, classes);
  absl::StatusOr<std::vector<Layer>> layers = ParseLayers(cfg.arch);
  if (!layers.ok()) return layers.status();
  ModelArch arch{.input_shape = input,
                 .layers = *std::move(layers),
                 .num_classes = classes};
  if (absl::Status s = ValidateArch(arch); !s.ok()) return s;
  return arch;
}

absl::StatusOr<double> ResolveNoiseMultiplier(const ExperimentConfig& cfg) {
  if (cfg.noise_multiplier >= 0.0) return cfg.noise_multiplier;
  return CalibrateSigma({.epsilon = cfg.target_epsilon, .delta = cfg.delta},
                        cfg.iterations);
}

absl::StatusOr<EnsembleManifest> RunEnsemble(const ExperimentConfig& cfg) {
  if (absl::Status s = ValidateExperimentConfig(cfg); !s.ok()) return s;
  absl::StatusOr<Dataset> data = LoadDataset(cfg);
  if (!data.ok()) return data.status();
  absl::StatusOr<ModelArch> arch = ResolveArch(cfg, *data);
  if (!arch.ok()) return arch.status();
  if (absl::Status s = ValidateDataset(*data, *arch); !s.ok()) return s;
  absl::StatusOr<double> sigma = ResolveNoiseMultiplier(cfg);
  if (!sigma.ok()) return sigma.status();

  const Sample canary = MakeCanary(arch->input_shape, cfg.canary_label);
  Dataset neighbor = *data;
  neighbor.push_back(canary);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(cfg.output_dir) / "models", ec);
  if (ec) {
    return absl::UnavailableError(absl::StrCat(
        "cannot create ", cfg.output_dir, ": ", ec.message()));
  }

  EnsembleManifest manifest;
  manifest.directory = cfg.output_dir;
  manifest.models_per_arm = cfg.models_per_arm;
  manifest.craft_per_arm = CraftCount(cfg.models_per_arm, cfg.craft_fraction);
  manifest.dataset_size = static_cast<int64_t>(data->size());
  manifest.neighbor_size = static_cast<int64_t>(neighbor.size());
  manifest.noise_multiplier = *sigma;
  manifest.delta = cfg.delta;
  manifest.base_seed = cfg.base_seed;
  manifest.canary_path = "canary.sample";
  if (*sigma > 0.0) {
    absl::StatusOr<double> eps =
        TheoreticalEpsilon(*sigma, cfg.iterations, cfg.delta);
    if (!eps.ok()) return eps.status();
    manifest.theoretical_epsilon = *eps;
  } else {
    manifest.theoretical_epsilon = std::numeric_limits<double>::infinity();
  }
  if (absl::Status s = WriteSampleFile(
          (fs::path(cfg.output_dir) / manifest.canary_path).string(), canary);
      !s.ok()) {
    return s;
  }

  const int64_t n = cfg.models_per_arm;
  manifest.models.resize(static_cast<size_t>(2 * n));
  absl::Status status = ParallelFor(
      manifest.models.size(), cfg.threads, [&](size_t slot) -> absl::Status {
        const Arm arm = slot < static_cast<size_t>(n) ? Arm::kWithout : Arm::kWith;
        const int64_t arm_index =
            static_cast<int64_t>(slot) - (arm == Arm::kWith ? n : 0);
        ModelRecord& rec = manifest.models[slot];
        rec.index = static_cast<int64_t>(slot);
        rec.arm = arm;
        rec.arm_index = arm_index;
        rec.split =
            arm_index < manifest.craft_per_arm ? Split::kCraft : Split::kEval;
        rec.seed = ModelSeed(cfg.base_seed, arm, arm_index);
        rec.path = absl::StrFormat("models/%s_%04d.model", ArmName(arm),
                                   arm_index);
        TrainStats stats;
        absl::StatusOr<ModelParams> params =
            Train(*arch, arm == Arm::kWith ? neighbor : *data,
                  MakeDpSgdConfig(cfg, *sigma, rec.seed), &stats);
        if (!params.ok()) {
          rec.ok = false;
          rec.error = std::string(params.status().message());
          return absl::OkStatus();
        }
        rec.final_step_loss = stats.final_step_loss;
        return WriteModelFile((fs::path(cfg.output_dir) / rec.path).string(),
                              *params);
      });
  if (!status.ok()) return status;
  if (absl::Status s = WriteManifest(manifest); !s.ok()) return s;
  return manifest;
}

std::string FormatManifest(const EnsembleManifest& m) {
  std::string out = "# dpaudit ensemble manifest v1\n";
  absl::StrAppend(&out, "models_per_arm = ", m.models_per_arm, "\n");
  absl::StrAppend(&out, "craft_per_arm = ", m.craft_per_arm, "\n");
  absl::StrAppend(&out, "dataset_size = ", m.dataset_size, "\n");
  absl::StrAppend(&out, "neighbor_size = ", m.neighbor_size, "\n");
  absl::StrAppend(&out, "noise_multiplier = ", FormatDouble(m.noise_multiplier),
                  "\n");
  absl::StrAppend(&out, "theoretical_epsilon = ",
                  FormatDouble(m.theoretical_epsilon), "\n");
  absl::StrAppend(&out, "delta = ", FormatDouble(m.delta), "\n");
  absl::StrAppend(&out, "base_seed = ", m.base_seed, "\n");
  absl::StrAppend(&out, "canary = ", m.canary_path, "\n");
  absl::StrAppend(&out, kManifestHeader, "\n");
  for (const ModelRecord& r : m.models) {
    absl::StrAppend(&out, r.index, ",", ArmName(r.arm), ",", r.arm_index, ",",
                    SplitName(r.split), ",", r.seed, ",", r.path, ",",
                    FormatDouble(r.final_step_loss), ",",
                    r.ok ? "ok" : "failed", ",", Sanitize(r.error), "\n");
  }
  return out;
}

absl::StatusOr<EnsembleManifest> ParseManifest(absl::string_view text,
                                               std::string directory) {
  EnsembleManifest m;
  m.directory = std::move(directory);
  bool in_table = false;
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    line = absl::StripAsciiWhitespace(line);
    if (line.empty() || line.front() == '#') continue;
    if (!in_table) {
      if (line == kManifestHeader) {
        in_table = true;
        continue;
      }
      const size_t eq = line.find('=');
      if (eq == absl::string_view::npos) return ManifestError(line_no, "expected key = value");
      const absl::string_view key = absl::StripAsciiWhitespace(line.substr(0, eq));
      const absl::string_view value = absl::StripAsciiWhitespace(line.substr(eq + 1));
      bool ok = true;
      if (key == "models_per_arm") {
        ok = absl::SimpleAtoi(value, &m.models_per_arm);
      } else if (key == "craft_per_arm") {
        ok = absl::SimpleAtoi(value, &m.craft_per_arm);
      } else if (key == "dataset_size") {
        ok = absl::SimpleAtoi(value, &m.dataset_size);
      } else if (key == "neighbor_size") {
        ok = absl::SimpleAtoi(value, &m.neighbor_size);
      } else if (key == "noise_multiplier") {
        ok = absl::SimpleAtod(value, &m.noise_multiplier);
      } else if (key == "theoretical_epsilon") {
        ok = absl::SimpleAtod(value, &m.theoretical_epsilon);
      } else if (key == "delta") {
        ok = absl::SimpleAtod(value, &m.delta);
      } else if (key == "base_seed") {
        ok = absl::SimpleAtoi(value, &m.base_seed);
      } else if (key == "canary") {
        m.canary_path = std::string(value);
      } else {
        return ManifestError(line_no, absl::StrCat("unknown key '", key, "'"));
      }
      if (!ok) return ManifestError(line_no, absl::StrCat("bad value for ", key));
      continue;
    }
    std::vector<absl::string_view> f = absl::StrSplit(line, ',');
    if (f.size() != 9) return ManifestError(line_no, "expected 9 fields");
    ModelRecord r;
    if (!absl::SimpleAtoi(f[0], &r.index) ||
        !absl::SimpleAtoi(f[2], &r.arm_index) ||
        !absl::SimpleAtoi(f[4], &r.seed) ||
        !absl::SimpleAtod(f[6], &r.final_step_loss)) {
      return ManifestError(line_no, "malformed numeric field");
    }
    if (f[1] == "without") {
      r.arm = Arm::kWithout;
    } else if (f[1] == "with") {
      r.arm = Arm::kWith;
    } else {
      return ManifestError(line_no, "bad arm");
    }
    if (f[3] == "craft") {
      r.split = Split::kCraft;
    } else if (f[3] == "eval") {
      r.split = Split::kEval;
    } else {
      return ManifestError(line_no, "bad split");
    }
    r.path = std::string(f[5]);
    r.ok = f[7] == "ok";
    r.error = std::string(f[8]);
    m.models.push_back(std::move(r));
  }
  if (!in_table) return absl::InvalidArgumentError("manifest has no model table");
  return m;
}

absl::Status WriteManifest(const EnsembleManifest& manifest) {
  return WriteFileBytes(
      (std::filesystem::path(manifest.directory) / std::string(kManifestFile)).string(),
      FormatManifest(manifest));
}

absl::StatusOr<EnsembleManifest> ReadManifest(const std::string& directory) {
  absl::StatusOr<std::string> text = ReadFileBytes(
      (std::filesystem::path(directory) / std::string(kManifestFile)).string());
  if (!text.ok()) return text.status();
  return ParseManifest(*text, directory);
}

std::vector<ModelRecord> SelectModels(const EnsembleManifest& manifest,
                                      Arm arm, Split split) {
  std::vector<ModelRecord> out;
  for (const ModelRecord& r : manifest.models) {
    if (r.ok && r.arm == arm && r.split == split) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const ModelRecord& a, const ModelRecord& b) {
    return a.arm_index < b.arm_index;
  });
  return out;
}

absl::StatusOr<std::vector<ModelParams>> LoadModels(
    const EnsembleManifest& manifest, const std::vector<ModelRecord>& records) {
  std::vector<ModelParams> models;
  models.reserve(records.size());
  for (const ModelRecord& r : records) {
    absl::StatusOr<ModelParams> p = ReadModelFile(
        (std::filesystem::path(manifest.directory) / r.path).string());
    if (!p.ok()) return p.status();
    models.push_back(*std::move(p));
  }
  return models;
}

}  // namespace dpaudit

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

#include "dpaudit/config.h"

#include <cmath>

#include "absl/strings/string_view.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpaudit/model_io.h"

namespace dpaudit {
namespace {

absl::Status BadValue(absl::string_view key, absl::string_view value) {
  return absl::InvalidArgumentError(
      absl::StrCat("bad value for '", key, "': '", value, "'"));
}

ConfigKey StringKey(std::string name, std::string help,
                    std::string ExperimentConfig::*field) {
  return ConfigKey{
      .name = name,
      .help = std::move(help),
      .set = [field](ExperimentConfig& c, absl::string_view v) {
        c.*field = std::string(v);
        return absl::OkStatus();
      },
      .get = [field](const ExperimentConfig& c) { return c.*field; },
  };
}

template <typename Int>
ConfigKey IntKey(std::string name, std::string help, Int ExperimentConfig::*field) {
  return ConfigKey{
      .name = name,
      .help = std::move(help),
      .set = [field, name](ExperimentConfig& c, absl::string_view v) {
        Int parsed;
        if (!absl::SimpleAtoi(v, &parsed)) return BadValue(name, v);
        c.*field = parsed;
        return absl::OkStatus();
      },
      .get = [field](const ExperimentConfig& c) { return absl::StrCat(c.*field); },
  };
}

ConfigKey DoubleKey(std::string name, std::string help,
                    double ExperimentConfig::*field) {
  return ConfigKey{
      .name = name,
      .help = std::move(help),
      .set = [field, name](ExperimentConfig& c, absl::string_view v) {
        double parsed;
        if (!absl::SimpleAtod(v, &parsed) || !std::isfinite(parsed)) {
          return BadValue(name, v);
        }
        c.*field = parsed;
        return absl::OkStatus();
      },
      .get = [field](const ExperimentConfig& c) {
        return absl::StrFormat("%.17g", c.*field);
      },
  };
}

std::vector<ConfigKey> BuildKeys() {
  using C = ExperimentConfig;
  return {
      StringKey("dataset", "synthetic | mnist", &C::dataset),
      StringKey("mnist_images", "IDX images file", &C::mnist_images),
      StringKey("mnist_labels", "IDX labels file", &C::mnist_labels),
      IntKey("mnist_limit", "keep the first N MNIST samples (0 = all)",
             &C::mnist_limit),
      IntKey("synthetic_dim", "synthetic input dimension", &C::synthetic_dim),
      IntKey("synthetic_classes", "synthetic class count",
             &C::synthetic_classes),
      IntKey("synthetic_size", "synthetic training-set size",
             &C::synthetic_size),
      IntKey("synthetic_seed", "synthetic data seed", &C::synthetic_seed),
      StringKey("arch", "layer list or 'auto'", &C::arch),
      DoubleKey("learning_rate", "DP-SGD learning rate", &C::learning_rate),
      IntKey("iterations", "DP-SGD steps T", &C::iterations),
      DoubleKey("clip_norm", "per-example clipping norm C", &C::clip_norm),
      DoubleKey("noise_multiplier",
                "noise multiplier sigma (negative = calibrate from target)",
                &C::noise_multiplier),
      DoubleKey("target_epsilon", "theoretical epsilon for calibration",
                &C::target_epsilon),
      DoubleKey("delta", "privacy delta", &C::delta),
      IntKey("models_per_arm", "models trained per arm (N)",
             &C::models_per_arm),
      DoubleKey("craft_fraction", "fraction of each arm used for crafting",
                &C::craft_fraction),
      IntKey("canary_label", "label of the blank canary", &C::canary_label),
      IntKey("craft_steps", "projected descent steps", &C::craft_steps),
      DoubleKey("craft_step_size", "projected descent step size",
                &C::craft_step_size),
      DoubleKey("variance_floor", "variance floor for ensemble statistics",
                &C::variance_floor),
      IntKey("craft_seed", "crafting seed (recorded)", &C::craft_seed),
      DoubleKey("alpha", "joint confidence parameter (1 - confidence)",
                &C::alpha),
      IntKey("eval_limit", "audit only the first K eval models per arm",
             &C::eval_limit),
      IntKey("base_seed", "base seed for per-model streams", &C::base_seed),
      IntKey("threads", "worker threads", &C::threads),
      StringKey("output_dir", "output directory", &C::output_dir),
  };
}

}  // namespace

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey>* keys =
      new std::vector<ConfigKey>(BuildKeys());
  return *keys;
}

absl::Status SetConfigValue(ExperimentConfig& cfg, absl::string_view key,
                            absl::string_view value) {
  for (const ConfigKey& k : ConfigKeys()) {
    if (k.name == key) return k.set(cfg, value);
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown config key '", key, "'"));
}

absl::Status ApplyConfigText(ExperimentConfig& cfg, absl::string_view text) {
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (size_t hash = line.find('#'); hash != absl::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": expected 'key = value'"));
    }
    const absl::string_view key = absl::StripAsciiWhitespace(line.substr(0, eq));
    const absl::string_view value =
        absl::StripAsciiWhitespace(line.substr(eq + 1));
    if (absl::Status s = SetConfigValue(cfg, key, value); !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": ", s.message()));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<ExperimentConfig> LoadConfigFile(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFileBytes(path);
  if (!text.ok()) return text.status();
  ExperimentConfig cfg;
  if (absl::Status s = ApplyConfigText(cfg, *text); !s.ok()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", s.message()));
  }
  return cfg;
}

std::string FormatConfig(const ExperimentConfig& cfg) {
  std::string out;
  for (const ConfigKey& k : ConfigKeys()) {
    absl::StrAppend(&out, k.name, " = ", k.get(cfg), "\n");
  }
  return out;
}

absl::Status ValidateExperimentConfig(const ExperimentConfig& cfg) {
  if (cfg.dataset != "synthetic" && cfg.dataset != "mnist") {
    return absl::InvalidArgumentError(
        absl::StrCat("dataset must be 'synthetic' or 'mnist', got '",
                     cfg.dataset, "'"));
  }
  if (cfg.dataset == "mnist" &&
      (cfg.mnist_images.empty() || cfg.mnist_labels.empty())) {
    return absl::InvalidArgumentError(
        "mnist dataset needs mnist_images and mnist_labels");
  }
  if (cfg.models_per_arm < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("models_per_arm must be >= 2, got ", cfg.models_per_arm));
  }
  if (!(cfg.craft_fraction > 0.0 && cfg.craft_fraction < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("craft_fraction must lie in (0, 1), got ",
                     cfg.craft_fraction));
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", cfg.delta));
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must lie in (0, 1), got ", cfg.alpha));
  }
  if (cfg.noise_multiplier < 0.0 && !(cfg.target_epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        "either noise_multiplier >= 0 or target_epsilon > 0 is required");
  }
  if (cfg.eval_limit < 0 || cfg.mnist_limit < 0) {
    return absl::InvalidArgumentError("limits must be nonnegative");
  }
  if (cfg.threads < 1) {
    return absl::InvalidArgumentError("threads must be >= 1");
  }
  if (absl::Status s = ValidateConfig(MakeDpSgdConfig(
          cfg, std::max(cfg.noise_multiplier, 0.0), cfg.base_seed));
      !s.ok()) {
    return s;
  }
  return ValidateCraftConfig(MakeCraftConfig(cfg, CraftObjective::kFisher));
}

ExperimentConfig PaperMnistPreset() {
  ExperimentConfig cfg;
  cfg.dataset = "mnist";
  cfg.arch = "auto";
  cfg.learning_rate = 4.0;
  cfg.iterations = 100;
  cfg.models_per_arm = 512;
  cfg.target_epsilon = 10.0;
  cfg.delta = 1e-5;
  cfg.alpha = 0.05;
  return cfg;
}

DpSgdConfig MakeDpSgdConfig(const ExperimentConfig& cfg, double sigma,
                            uint64_t seed) {
  return DpSgdConfig{.learning_rate = cfg.learning_rate,
                     .iterations = cfg.iterations,
                     .clip_norm = cfg.clip_norm,
                     .noise_multiplier = sigma,
                     .seed = seed};
}

CraftConfig MakeCraftConfig(const ExperimentConfig& cfg,
                            CraftObjective objective) {
  return CraftConfig{.objective = objective,
                     .steps = cfg.craft_steps,
                     .step_size = cfg.craft_step_size,
                     .variance_floor = cfg.variance_floor,
                     .seed = cfg.craft_seed,
                     .threads = cfg.threads};
}

}  // namespace dpaudit

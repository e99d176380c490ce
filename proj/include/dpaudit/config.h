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

// Experiment configuration and its flat `key = value` file format.
//
// One entry per line; `#` starts a comment; blank lines are ignored. Every
// key in ConfigKeys() may appear, and the same keys are exposed as CLI flags.

#ifndef DPAUDIT_CONFIG_H_
#define DPAUDIT_CONFIG_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/crafting.h"
#include "dpaudit/dpsgd.h"
#include "dpaudit/model.h"

namespace dpaudit {

struct ExperimentConfig {
  // Dataset: "synthetic" or "mnist".
  std::string dataset = "synthetic";
  std::string mnist_images;
  std::string mnist_labels;
  int64_t mnist_limit = 0;  // 0 keeps every sample
  int64_t synthetic_dim = 64;
  int64_t synthetic_classes = 2;
  int64_t synthetic_size = 512;
  uint64_t synthetic_seed = 1;

  // Layer list (see ParseLayers) or "auto" for DefaultArch.
  std::string arch = "auto";

  double learning_rate = 4.0;
  int64_t iterations = 30;
  double clip_norm = 1.0;
  // Negative means calibrate from target_epsilon / delta.
  double noise_multiplier = -1.0;
  double target_epsilon = 10.0;
  double delta = 1e-5;

  int64_t models_per_arm = 128;
  double craft_fraction = 0.5;
  int canary_label = 0;

  int craft_steps = 500;
  double craft_step_size = 0.05;
  double variance_floor = 1e-6;
  uint64_t craft_seed = 0;

  double alpha = 0.05;
  // 0 audits every eval-split model; otherwise the first eval_limit per arm.
  int64_t eval_limit = 0;

  uint64_t base_seed = 0;
  int threads = 1;
  std::string output_dir = "dpaudit_out";
};

absl::Status ValidateExperimentConfig(const ExperimentConfig& cfg);

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<absl::Status(ExperimentConfig&, absl::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<ConfigKey>& ConfigKeys();

absl::Status SetConfigValue(ExperimentConfig& cfg, absl::string_view key,
                            absl::string_view value);

// Applies a key-value document on top of `cfg`.
absl::Status ApplyConfigText(ExperimentConfig& cfg, absl::string_view text);
absl::StatusOr<ExperimentConfig> LoadConfigFile(const std::string& path);

// Every key in ConfigKeys() order; ApplyConfigText(FormatConfig(c)) == c.
std::string FormatConfig(const ExperimentConfig& cfg);

// The paper-scale MNIST configuration: 512 models per arm, T = 100,
// learning rate 4, conv arch. Dataset paths still have to be supplied.
ExperimentConfig PaperMnistPreset();

DpSgdConfig MakeDpSgdConfig(const ExperimentConfig& cfg, double sigma,
                            uint64_t seed);
CraftConfig MakeCraftConfig(const ExperimentConfig& cfg,
                            CraftObjective objective);

}  // namespace dpaudit

#endif  // DPAUDIT_CONFIG_H_

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

// Paired ensemble training: N models on D and N on D' = D + {canary}, each
// from its own seed stream, split by index into craft and eval subsets.

#ifndef DPAUDIT_ENSEMBLE_H_
#define DPAUDIT_ENSEMBLE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/config.h"
#include "dpaudit/dpsgd.h"
#include "dpaudit/model.h"

namespace dpaudit {

enum class Arm { kWithout = 0, kWith = 1 };
enum class Split { kCraft, kEval };

absl::string_view ArmName(Arm arm);
absl::string_view SplitName(Split split);

struct ModelRecord {
  int64_t index = 0;      // unique across the manifest
  Arm arm = Arm::kWithout;
  int64_t arm_index = 0;  // position within the arm
  Split split = Split::kCraft;
  uint64_t seed = 0;
  std::string path;       // relative to the manifest directory
  double final_step_loss = 0.0;
  bool ok = true;
  std::string error;      // set when training failed

  friend bool operator==(const ModelRecord&, const ModelRecord&) = default;
};

struct EnsembleManifest {
  std::string directory;  // where the manifest and model files live
  int64_t models_per_arm = 0;
  int64_t craft_per_arm = 0;
  int64_t dataset_size = 0;   // |D|
  int64_t neighbor_size = 0;  // |D'| = |D| + 1
  double noise_multiplier = 0.0;
  double theoretical_epsilon = 0.0;
  double delta = 0.0;
  uint64_t base_seed = 0;
  std::string canary_path;  // relative to directory
  std::vector<ModelRecord> models;
};

// first ceil(fraction * n) indices of each arm are craft models.
int64_t CraftCount(int64_t models_per_arm, double craft_fraction);

// seed for (arm, index) under base_seed.
uint64_t ModelSeed(uint64_t base_seed, Arm arm, int64_t arm_index);

absl::StatusOr<Dataset> LoadDataset(const ExperimentConfig& cfg);
absl::StatusOr<ModelArch> ResolveArch(const ExperimentConfig& cfg,
                                      const Dataset& data);
// cfg.noise_multiplier when nonnegative, otherwise calibrated.
absl::StatusOr<double> ResolveNoiseMultiplier(const ExperimentConfig& cfg);

// Trains every model (in parallel over cfg.threads), writes models, the
// canary, and manifest.csv under cfg.output_dir. A model whose training
// fails is recorded as failed; the run itself still succeeds.
absl::StatusOr<EnsembleManifest> RunEnsemble(const ExperimentConfig& cfg);

std::string FormatManifest(const EnsembleManifest& manifest);
absl::StatusOr<EnsembleManifest> ParseManifest(absl::string_view text,
                                               std::string directory);
absl::Status WriteManifest(const EnsembleManifest& manifest);
absl::StatusOr<EnsembleManifest> ReadManifest(const std::string& directory);

// Successfully trained records of one arm and split, in arm-index order.
std::vector<ModelRecord> SelectModels(const EnsembleManifest& manifest,
                                      Arm arm, Split split);
absl::StatusOr<std::vector<ModelParams>> LoadModels(
    const EnsembleManifest& manifest, const std::vector<ModelRecord>& records);

}  // namespace dpaudit

#endif  // DPAUDIT_ENSEMBLE_H_

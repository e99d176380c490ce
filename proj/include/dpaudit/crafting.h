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

// Adversarial audit-sample crafting.
//
// Starting from the canary, the input pixels are optimized by projected
// gradient descent to separate the loss distributions of models trained
// without the canary (M) and with it (M'). Each arm's losses are summarized
// by their ensemble mean and (floored) variance; the three objectives are
//
//   l2:            mean(M') - mean(M)
//   bhattacharyya: -[(m - m')^2 / (4 (v + v')) + 1/2 ln((v + v') / (2 s s'))]
//   fisher:        -(m' - m)^2 / (v' + v)
//
// with s = sqrt(v). All three are minimized.

#ifndef DPAUDIT_CRAFTING_H_
#define DPAUDIT_CRAFTING_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/model.h"

namespace dpaudit {

enum class CraftObjective { kL2, kBhattacharyya, kFisher };

absl::string_view ObjectiveName(CraftObjective objective);
absl::StatusOr<CraftObjective> ParseObjective(absl::string_view name);

struct CraftConfig {
  CraftObjective objective = CraftObjective::kFisher;
  int steps = 500;
  double step_size = 0.05;
  double pixel_min = 0.0;
  double pixel_max = 1.0;
  double variance_floor = 1e-6;
  // Projected descent from the canary is deterministic and draws nothing;
  // the seed is carried for provenance in reports.
  uint64_t seed = 0;
  // Workers for per-model loss/gradient evaluation within a step.
  int threads = 1;
};

absl::Status ValidateCraftConfig(const CraftConfig& cfg);

// All-zero (blank) image with the given label.
Sample MakeCanary(const Shape& input_shape, int label);

// Cross-entropy of `sample` under each model, in model order.
absl::StatusOr<std::vector<double>> EnsembleLosses(
    std::span<const ModelParams> models, const Sample& sample);

// Per-arm summaries: population mean and variance plus the floor.
class LossEnsemble {
 public:
  static absl::StatusOr<LossEnsemble> Create(std::vector<double> without,
                                             std::vector<double> with,
                                             double variance_floor = 1e-6);

  const std::vector<double>& losses_without() const { return without_; }
  const std::vector<double>& losses_with() const { return with_; }
  double mean_without() const { return mean_without_; }
  double mean_with() const { return mean_with_; }
  // Floored variances: population variance + variance_floor.
  double var_without() const { return var_without_; }
  double var_with() const { return var_with_; }

 private:
  LossEnsemble() = default;

  std::vector<double> without_;
  std::vector<double> with_;
  double mean_without_ = 0.0;
  double mean_with_ = 0.0;
  double var_without_ = 0.0;
  double var_with_ = 0.0;
};

double ObjectiveL2(const LossEnsemble& ens);
double ObjectiveBhattacharyya(const LossEnsemble& ens);
double ObjectiveFisher(const LossEnsemble& ens);
double EvaluateObjective(CraftObjective objective, const LossEnsemble& ens);

// Objective value and its gradient with respect to every per-model loss,
// differentiating through the ensemble means and variances.
struct ObjectiveLossGradient {
  double value = 0.0;
  std::vector<double> d_without;
  std::vector<double> d_with;
};
ObjectiveLossGradient ObjectiveGradientWrtLosses(CraftObjective objective,
                                                 const LossEnsemble& ens);

// Objective value at `sample` and its gradient with respect to the pixels.
struct PixelObjective {
  double value = 0.0;
  std::vector<double> gradient;
};
absl::StatusOr<PixelObjective> ObjectivePixelGradient(
    std::span<const ModelParams> models_without,
    std::span<const ModelParams> models_with, const Sample& sample,
    CraftObjective objective, double variance_floor, int threads = 1);

struct CraftResult {
  Sample sample;
  double initial_objective = 0.0;
  double best_objective = 0.0;
  int best_step = 0;  // 0 means the canary itself was best
};

// Projected gradient descent from `canary`; pixels are projected onto
// [pixel_min, pixel_max] after every step and the best iterate is returned.
// The label is never changed.
absl::StatusOr<CraftResult> CraftAdversarial(
    std::span<const ModelParams> models_without,
    std::span<const ModelParams> models_with, const Sample& canary,
    const CraftConfig& cfg);

}  // namespace dpaudit

#endif  // DPAUDIT_CRAFTING_H_

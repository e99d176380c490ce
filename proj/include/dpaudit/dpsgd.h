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

// Full-batch DP-SGD: per-example clipping, one Gaussian noise vector per
// step, and only the final parameters returned.

#ifndef DPAUDIT_DPSGD_H_
#define DPAUDIT_DPSGD_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/model.h"
#include "dpaudit/noise_stream.h"

namespace dpaudit {

using Dataset = std::vector<Sample>;

struct DpSgdConfig {
  double learning_rate = 4.0;
  int64_t iterations = 100;
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  // Only full-batch training (sampling probability 1) is supported.
  double sampling_probability = 1.0;
  uint64_t seed = 0;
};

absl::Status ValidateConfig(const DpSgdConfig& cfg);

// Non-empty, one input shape matching the arch, labels in range.
absl::Status ValidateDataset(const Dataset& data, const ModelArch& arch);

// g / max(1, ||g||_2 / C).
std::vector<double> ClipGradient(std::span<const double> g, double clip_norm);

struct ClippedSum {
  std::vector<double> sum;
  double mean_loss = 0.0;
};

// Sum over the dataset of clipped per-example gradients, accumulated in
// dataset order. The clip radius is clip_norm shrunk by a relative
// O(n^2 * 2^-53) margin so that rounding cannot push the difference between
// neighboring sums past clip_norm.
absl::StatusOr<ClippedSum> ClippedGradientSum(const ModelParams& params,
                                              const Dataset& data,
                                              double clip_norm);

// theta -= lr / batch_size * (clipped_sum + z), z ~ N(0, (C sigma)^2 I). Draws
// exactly theta.size() Gaussians, in parameter-index order, even when
// sigma = 0.
void ApplyNoisyUpdate(std::span<double> theta,
                      std::span<const double> clipped_sum, size_t batch_size,
                      const DpSgdConfig& cfg, NoiseStream& rng);

// One full-batch step from `params`.
absl::StatusOr<ModelParams> DpSgdStep(const ModelParams& params,
                                      const Dataset& data,
                                      const DpSgdConfig& cfg,
                                      NoiseStream& rng);

struct TrainStats {
  double final_step_loss = 0.0;  // mean loss at theta_{T-1}
  uint64_t rng_draws = 0;
};

// Initializes theta_0 from NoiseStream(cfg.seed) and runs cfg.iterations
// steps on the same stream. `stats` may be null.
absl::StatusOr<ModelParams> Train(const ModelArch& arch, const Dataset& data,
                                  const DpSgdConfig& cfg,
                                  TrainStats* stats = nullptr);

}  // namespace dpaudit

#endif  // DPAUDIT_DPSGD_H_

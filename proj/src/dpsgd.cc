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

#include "dpaudit/dpsgd.h"

#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"

namespace dpaudit {

absl::Status ValidateConfig(const DpSgdConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    return absl::InvalidArgumentError(
        absl::StrCat("learning rate must be positive, got ", cfg.learning_rate));
  }
  if (cfg.iterations < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("iterations must be >= 1, got ", cfg.iterations));
  }
  if (!(cfg.clip_norm > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("clip norm must be positive, got ", cfg.clip_norm));
  }
  if (!(cfg.noise_multiplier >= 0.0) || !std::isfinite(cfg.noise_multiplier)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "noise multiplier must be finite and >= 0, got ", cfg.noise_multiplier));
  }
  if (cfg.sampling_probability != 1.0) {
    return absl::UnimplementedError(
        absl::StrCat("only full-batch training is supported, got sampling "
                     "probability ",
                     cfg.sampling_probability));
  }
  return absl::OkStatus();
}

absl::Status ValidateDataset(const Dataset& data, const ModelArch& arch) {
  if (data.empty()) return absl::InvalidArgumentError("dataset is empty");
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].x.shape() != arch.input_shape) {
      return absl::InvalidArgumentError(
          absl::StrCat("sample ", i, " has shape ",
                       ShapeToString(data[i].x.shape()), ", arch expects ",
                       ShapeToString(arch.input_shape)));
    }
    if (data[i].label < 0 ||
        static_cast<size_t>(data[i].label) >= arch.num_classes) {
      return absl::InvalidArgumentError(
          absl::StrCat("sample ", i, " has label ", data[i].label));
    }
  }
  return absl::OkStatus();
}

std::vector<double> ClipGradient(std::span<const double> g, double clip_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  std::vector<double> out(g.begin(), g.end());
  if (norm > clip_norm) {
    const double factor = norm / clip_norm;
    for (double& v : out) v /= factor;
  }
  return out;
}

absl::StatusOr<ClippedSum> ClippedGradientSum(const ModelParams& params,
                                              const Dataset& data,
                                              double clip_norm) {
  // Recursive summation of n vectors of norm <= r is off by at most about
  // n * r * n * 2^-53 in norm. Clipping to a radius shrunk by four times that
  // keeps the computed sums of neighboring datasets within clip_norm of each
  // other, not merely within clip_norm plus rounding.
  const double n = static_cast<double>(data.size());
  const double radius =
      clip_norm * (1.0 - 4.0 * (n + 2.0) * (n + 2.0) * 0x1.0p-53);
  ClippedSum result;
  result.sum.assign(params.theta.size(), 0.0);
  double loss_sum = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    absl::StatusOr<LossAndGradient> lg = ParamGradient(params, data[i]);
    if (!lg.ok()) return lg.status();
    for (double v : lg->gradient) {
      if (!std::isfinite(v)) {
        return absl::InternalError(absl::StrCat(
            "non-finite gradient for sample ", i, " (loss ", lg->loss, ")"));
      }
    }
    const std::vector<double> clipped = ClipGradient(lg->gradient, radius);
    for (size_t j = 0; j < clipped.size(); ++j) result.sum[j] += clipped[j];
    loss_sum += lg->loss;
  }
  result.mean_loss = loss_sum / static_cast<double>(data.size());
  return result;
}

void ApplyNoisyUpdate(std::span<double> theta,
                      std::span<const double> clipped_sum, size_t batch_size,
                      const DpSgdConfig& cfg, NoiseStream& rng) {
  const double noise_scale = cfg.clip_norm * cfg.noise_multiplier;
  const double step = cfg.learning_rate / static_cast<double>(batch_size);
  for (size_t j = 0; j < theta.size(); ++j) {
    const double noisy = clipped_sum[j] + noise_scale * rng.Gaussian();
    theta[j] -= step * noisy;
  }
}

absl::StatusOr<ModelParams> DpSgdStep(const ModelParams& params,
                                      const Dataset& data,
                                      const DpSgdConfig& cfg,
                                      NoiseStream& rng) {
  if (absl::Status s = ValidateConfig(cfg); !s.ok()) return s;
  if (absl::Status s = ValidateDataset(data, params.arch); !s.ok()) return s;
  absl::StatusOr<ClippedSum> clipped =
      ClippedGradientSum(params, data, cfg.clip_norm);
  if (!clipped.ok()) return clipped.status();
  ModelParams next = params;
  ApplyNoisyUpdate(next.theta, clipped->sum, data.size(), cfg, rng);
  return next;
}

absl::StatusOr<ModelParams> Train(const ModelArch& arch, const Dataset& data,
                                  const DpSgdConfig& cfg, TrainStats* stats) {
  if (absl::Status s = ValidateConfig(cfg); !s.ok()) return s;
  if (absl::Status s = ValidateArch(arch); !s.ok()) return s;
  if (absl::Status s = ValidateDataset(data, arch); !s.ok()) return s;
  NoiseStream rng(cfg.seed);
  absl::StatusOr<ModelParams> params = InitializeParams(arch, rng);
  if (!params.ok()) return params.status();
  double last_loss = 0.0;
  for (int64_t t = 0; t < cfg.iterations; ++t) {
    absl::StatusOr<ClippedSum> clipped =
        ClippedGradientSum(*params, data, cfg.clip_norm);
    if (!clipped.ok()) {
      return absl::Status(clipped.status().code(),
                          absl::StrCat("step ", t, ": ",
                                       clipped.status().message()));
    }
    ApplyNoisyUpdate(params->theta, clipped->sum, data.size(), cfg, rng);
    last_loss = clipped->mean_loss;
  }
  if (stats != nullptr) {
    stats->final_step_loss = last_loss;
    stats->rng_draws = rng.draws();
  }
  return params;
}

}  // namespace dpaudit

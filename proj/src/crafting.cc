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

#include "dpaudit/crafting.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/string_view.h"
#include "absl/strings/str_cat.h"
#include "dpaudit/parallel.h"

namespace dpaudit {
namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // population variance, unfloored
};

Moments ComputeMoments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size());
  return m;
}

// Chains d(objective)/d(mean) and d(objective)/d(var) of one arm down to the
// arm's individual losses.
std::vector<double> ChainArm(const std::vector<double>& losses, double mean,
                             double d_mean, double d_var) {
  const double n = static_cast<double>(losses.size());
  std::vector<double> d(losses.size());
  for (size_t i = 0; i < losses.size(); ++i) {
    d[i] = d_mean / n + d_var * 2.0 * (losses[i] - mean) / n;
  }
  return d;
}

}  // namespace

absl::string_view ObjectiveName(CraftObjective objective) {
  switch (objective) {
    case CraftObjective::kL2:
      return "l2";
    case CraftObjective::kBhattacharyya:
      return "bhattacharyya";
    case CraftObjective::kFisher:
      return "fisher";
  }
  return "unknown";
}

absl::StatusOr<CraftObjective> ParseObjective(absl::string_view name) {
  for (CraftObjective o : {CraftObjective::kL2, CraftObjective::kBhattacharyya,
                           CraftObjective::kFisher}) {
    if (name == ObjectiveName(o)) return o;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown objective '", name, "' (expected l2, bhattacharyya or fisher)"));
}

absl::Status ValidateCraftConfig(const CraftConfig& cfg) {
  if (cfg.steps < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("crafting needs at least one step, got ", cfg.steps));
  }
  if (!(cfg.step_size > 0.0) || !std::isfinite(cfg.step_size)) {
    return absl::InvalidArgumentError(
        absl::StrCat("step size must be positive, got ", cfg.step_size));
  }
  if (!(cfg.variance_floor > 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "variance floor must be positive, got ", cfg.variance_floor));
  }
  if (!(cfg.pixel_min < cfg.pixel_max)) {
    return absl::InvalidArgumentError("empty pixel box");
  }
  return absl::OkStatus();
}

Sample MakeCanary(const Shape& input_shape, int label) {
  return Sample{.x = Tensor(input_shape), .label = label};
}

absl::StatusOr<std::vector<double>> EnsembleLosses(
    std::span<const ModelParams> models, const Sample& sample) {
  if (models.empty()) return absl::InvalidArgumentError("no models");
  std::vector<double> losses;
  losses.reserve(models.size());
  for (const ModelParams& m : models) {
    absl::StatusOr<double> loss = SampleLoss(m, sample);
    if (!loss.ok()) return loss.status();
    losses.push_back(*loss);
  }
  return losses;
}

absl::StatusOr<LossEnsemble> LossEnsemble::Create(std::vector<double> without,
                                                  std::vector<double> with,
                                                  double variance_floor) {
  if (without.empty() || with.empty()) {
    return absl::InvalidArgumentError("both loss arms must be non-empty");
  }
  if (!(variance_floor > 0.0)) {
    return absl::InvalidArgumentError("variance floor must be positive");
  }
  LossEnsemble ens;
  const Moments mw = ComputeMoments(without);
  const Moments mc = ComputeMoments(with);
  ens.without_ = std::move(without);
  ens.with_ = std::move(with);
  ens.mean_without_ = mw.mean;
  ens.mean_with_ = mc.mean;
  ens.var_without_ = mw.var + variance_floor;
  ens.var_with_ = mc.var + variance_floor;
  return ens;
}

double ObjectiveL2(const LossEnsemble& ens) {
  return ens.mean_with() - ens.mean_without();
}

double ObjectiveBhattacharyya(const LossEnsemble& ens) {
  const double diff = ens.mean_without() - ens.mean_with();
  const double v = ens.var_without();
  const double vp = ens.var_with();
  const double s = v + vp;
  const double distance = diff * diff / (4.0 * s) +
                          0.5 * std::log(s / (2.0 * std::sqrt(v) * std::sqrt(vp)));
  return -distance;
}

double ObjectiveFisher(const LossEnsemble& ens) {
  const double diff = ens.mean_with() - ens.mean_without();
  return -diff * diff / (ens.var_with() + ens.var_without());
}

double EvaluateObjective(CraftObjective objective, const LossEnsemble& ens) {
  switch (objective) {
    case CraftObjective::kL2:
      return ObjectiveL2(ens);
    case CraftObjective::kBhattacharyya:
      return ObjectiveBhattacharyya(ens);
    case CraftObjective::kFisher:
      return ObjectiveFisher(ens);
  }
  return 0.0;
}

ObjectiveLossGradient ObjectiveGradientWrtLosses(CraftObjective objective,
                                                 const LossEnsemble& ens) {
  const double m = ens.mean_without();
  const double mp = ens.mean_with();
  const double v = ens.var_without();
  const double vp = ens.var_with();
  const double s = v + vp;
  // Partials of the objective with respect to (m, v) and (m', v').
  double d_m = 0.0, d_v = 0.0, d_mp = 0.0, d_vp = 0.0;
  switch (objective) {
    case CraftObjective::kL2:
      d_m = -1.0;
      d_mp = 1.0;
      break;
    case CraftObjective::kFisher: {
      const double diff = mp - m;
      d_mp = -2.0 * diff / s;
      d_m = -d_mp;
      d_v = d_vp = diff * diff / (s * s);
      break;
    }
    case CraftObjective::kBhattacharyya: {
      const double diff = m - mp;
      const double sep = diff * diff / (4.0 * s * s);
      d_m = -diff / (2.0 * s);
      d_mp = -d_m;
      d_v = sep - 0.5 * (1.0 / s - 0.5 / v);
      d_vp = sep - 0.5 * (1.0 / s - 0.5 / vp);
      break;
    }
  }
  return ObjectiveLossGradient{
      .value = EvaluateObjective(objective, ens),
      .d_without = ChainArm(ens.losses_without(), m, d_m, d_v),
      .d_with = ChainArm(ens.losses_with(), mp, d_mp, d_vp),
  };
}

absl::StatusOr<PixelObjective> ObjectivePixelGradient(
    std::span<const ModelParams> models_without,
    std::span<const ModelParams> models_with, const Sample& sample,
    CraftObjective objective, double variance_floor, int threads) {
  if (models_without.empty() || models_with.empty()) {
    return absl::InvalidArgumentError("both model arms must be non-empty");
  }
  const size_t n = models_without.size();
  const size_t total = n + models_with.size();
  std::vector<LossAndGradient> per_model(total);
  absl::Status status = ParallelFor(total, threads, [&](size_t i) {
    const ModelParams& model =
        i < n ? models_without[i] : models_with[i - n];
    absl::StatusOr<LossAndGradient> lg = InputGradient(model, sample);
    if (!lg.ok()) return lg.status();
    per_model[i] = *std::move(lg);
    return absl::OkStatus();
  });
  if (!status.ok()) return status;

  std::vector<double> without(n), with(models_with.size());
  for (size_t i = 0; i < total; ++i) {
    (i < n ? without[i] : with[i - n]) = per_model[i].loss;
  }
  absl::StatusOr<LossEnsemble> ens =
      LossEnsemble::Create(std::move(without), std::move(with), variance_floor);
  if (!ens.ok()) return ens.status();
  const ObjectiveLossGradient dl = ObjectiveGradientWrtLosses(objective, *ens);

  PixelObjective result{.value = dl.value,
                        .gradient = std::vector<double>(sample.x.size(), 0.0)};
  for (size_t i = 0; i < total; ++i) {
    const double weight = i < n ? dl.d_without[i] : dl.d_with[i - n];
    const std::vector<double>& g = per_model[i].gradient;
    for (size_t j = 0; j < g.size(); ++j) result.gradient[j] += weight * g[j];
  }
  return result;
}

absl::StatusOr<CraftResult> CraftAdversarial(
    std::span<const ModelParams> models_without,
    std::span<const ModelParams> models_with, const Sample& canary,
    const CraftConfig& cfg) {
  if (absl::Status s = ValidateCraftConfig(cfg); !s.ok()) return s;
  Sample current = canary;
  absl::StatusOr<PixelObjective> eval =
      ObjectivePixelGradient(models_without, models_with, current,
                             cfg.objective, cfg.variance_floor, cfg.threads);
  if (!eval.ok()) return eval.status();
  if (!std::isfinite(eval->value)) {
    return absl::InternalError("objective is not finite at the canary");
  }
  CraftResult result{.sample = current,
                     .initial_objective = eval->value,
                     .best_objective = eval->value};
  for (int step = 1; step <= cfg.steps; ++step) {
    std::span<double> pixels = current.x.data();
    for (size_t j = 0; j < pixels.size(); ++j) {
      pixels[j] = std::clamp(pixels[j] - cfg.step_size * eval->gradient[j],
                             cfg.pixel_min, cfg.pixel_max);
    }
    eval = ObjectivePixelGradient(models_without, models_with, current,
                                  cfg.objective, cfg.variance_floor,
                                  cfg.threads);
    if (!eval.ok()) return eval.status();
    if (!std::isfinite(eval->value)) {
      return absl::InternalError(
          absl::StrCat("objective became non-finite at step ", step));
    }
    if (eval->value < result.best_objective) {
      result.best_objective = eval->value;
      result.best_step = step;
      result.sample = current;
    }
  }
  return result;
}

}  // namespace dpaudit

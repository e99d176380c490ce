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

#include "dpaudit/model.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/string_view.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace dpaudit {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct LayerPlan {
  const Layer* layer;
  Shape in_shape;
  Shape out_shape;
  size_t param_offset = 0;
  size_t weight_count = 0;
  size_t bias_count = 0;
};

absl::StatusOr<std::vector<LayerPlan>> BuildPlan(const ModelArch& arch) {
  if (arch.input_shape.empty() || ShapeSize(arch.input_shape) == 0) {
    return absl::InvalidArgumentError("arch input shape must be non-empty");
  }
  if (arch.num_classes == 0) {
    return absl::InvalidArgumentError("arch needs at least one class");
  }
  std::vector<LayerPlan> plan;
  plan.reserve(arch.layers.size());
  Shape shape = arch.input_shape;
  size_t offset = 0;
  for (size_t i = 0; i < arch.layers.size(); ++i) {
    LayerPlan step{.layer = &arch.layers[i], .in_shape = shape};
    step.param_offset = offset;
    absl::Status status = std::visit(
        Overloaded{
            [&](const DenseLayer& d) -> absl::Status {
              if (shape.size() != 1 || shape[0] != d.in || d.out == 0) {
                return absl::InvalidArgumentError(absl::StrCat(
                    "layer ", i, ": dense(", d.in, "->", d.out,
                    ") cannot take input ", ShapeToString(shape)));
              }
              step.weight_count = d.in * d.out;
              step.bias_count = d.out;
              step.out_shape = {d.out};
              return absl::OkStatus();
            },
            [&](const Conv2dLayer& c) -> absl::Status {
              if (shape.size() != 3 || shape[0] != c.in_channels ||
                  c.out_channels == 0 || c.kernel == 0 || c.stride == 0 ||
                  shape[1] < c.kernel || shape[2] < c.kernel) {
                return absl::InvalidArgumentError(absl::StrCat(
                    "layer ", i, ": conv2d(", c.in_channels, "->",
                    c.out_channels, ", k", c.kernel, ", s", c.stride,
                    ") cannot take input ", ShapeToString(shape)));
              }
              step.weight_count =
                  c.out_channels * c.in_channels * c.kernel * c.kernel;
              step.bias_count = c.out_channels;
              step.out_shape = {c.out_channels,
                                (shape[1] - c.kernel) / c.stride + 1,
                                (shape[2] - c.kernel) / c.stride + 1};
              return absl::OkStatus();
            },
            [&](const ReluLayer&) -> absl::Status {
              step.out_shape = shape;
              return absl::OkStatus();
            },
            [&](const FlattenLayer&) -> absl::Status {
              step.out_shape = {ShapeSize(shape)};
              return absl::OkStatus();
            },
        },
        arch.layers[i]);
    if (!status.ok()) return status;
    offset += step.weight_count + step.bias_count;
    shape = step.out_shape;
    plan.push_back(std::move(step));
  }
  if (shape.size() != 1 || shape[0] != arch.num_classes) {
    return absl::InvalidArgumentError(
        absl::StrCat("network output ", ShapeToString(shape),
                     " does not match ", arch.num_classes, " classes"));
  }
  return plan;
}

size_t PlanParameterCount(const std::vector<LayerPlan>& plan) {
  if (plan.empty()) return 0;
  const LayerPlan& last = plan.back();
  return last.param_offset + last.weight_count + last.bias_count;
}

void DenseForward(const DenseLayer& d, const double* w, const double* b,
                  const double* in, double* out) {
  for (size_t o = 0; o < d.out; ++o) {
    const double* row = w + o * d.in;
    double acc = b[o];
    for (size_t i = 0; i < d.in; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void DenseBackward(const DenseLayer& d, const double* w, const double* in,
                   const double* d_out, double* d_in, double* d_w,
                   double* d_b) {
  if (d_in != nullptr) std::fill(d_in, d_in + d.in, 0.0);
  for (size_t o = 0; o < d.out; ++o) {
    const double g = d_out[o];
    if (d_in != nullptr) {
      const double* row = w + o * d.in;
      for (size_t i = 0; i < d.in; ++i) d_in[i] += row[i] * g;
    }
    if (d_w != nullptr) {
      double* grow = d_w + o * d.in;
      for (size_t i = 0; i < d.in; ++i) grow[i] += g * in[i];
      d_b[o] += g;
    }
  }
}

void ConvForward(const Conv2dLayer& c, const Shape& in_shape,
                 const Shape& out_shape, const double* w, const double* b,
                 const double* in, double* out) {
  const size_t h = in_shape[1], wd = in_shape[2];
  const size_t oh = out_shape[1], ow = out_shape[2];
  const size_t k = c.kernel;
  for (size_t oc = 0; oc < c.out_channels; ++oc) {
    for (size_t y = 0; y < oh; ++y) {
      for (size_t x = 0; x < ow; ++x) {
        double acc = b[oc];
        for (size_t ic = 0; ic < c.in_channels; ++ic) {
          const double* kern = w + (oc * c.in_channels + ic) * k * k;
          const double* plane = in + ic * h * wd;
          for (size_t ky = 0; ky < k; ++ky) {
            const double* src = plane + (y * c.stride + ky) * wd + x * c.stride;
            for (size_t kx = 0; kx < k; ++kx) acc += kern[ky * k + kx] * src[kx];
          }
        }
        out[(oc * oh + y) * ow + x] = acc;
      }
    }
  }
}

void ConvBackward(const Conv2dLayer& c, const Shape& in_shape,
                  const Shape& out_shape, const double* w, const double* in,
                  const double* d_out, double* d_in, double* d_w,
                  double* d_b) {
  const size_t h = in_shape[1], wd = in_shape[2];
  const size_t oh = out_shape[1], ow = out_shape[2];
  const size_t k = c.kernel;
  if (d_in != nullptr) std::fill(d_in, d_in + ShapeSize(in_shape), 0.0);
  for (size_t oc = 0; oc < c.out_channels; ++oc) {
    for (size_t y = 0; y < oh; ++y) {
      for (size_t x = 0; x < ow; ++x) {
        const double g = d_out[(oc * oh + y) * ow + x];
        if (d_b != nullptr) d_b[oc] += g;
        for (size_t ic = 0; ic < c.in_channels; ++ic) {
          const size_t kbase = (oc * c.in_channels + ic) * k * k;
          const size_t pbase = ic * h * wd;
          for (size_t ky = 0; ky < k; ++ky) {
            const size_t row = pbase + (y * c.stride + ky) * wd + x * c.stride;
            for (size_t kx = 0; kx < k; ++kx) {
              if (d_w != nullptr) d_w[kbase + ky * k + kx] += g * in[row + kx];
              if (d_in != nullptr) d_in[row + kx] += g * w[kbase + ky * k + kx];
            }
          }
        }
      }
    }
  }
}

absl::Status ValidateInput(const ModelParams& params,
                           const std::vector<LayerPlan>& plan,
                           const Tensor& x) {
  if (params.theta.size() != PlanParameterCount(plan)) {
    return absl::InvalidArgumentError(
        absl::StrCat("theta has ", params.theta.size(), " entries, arch needs ",
                     PlanParameterCount(plan)));
  }
  if (x.shape() != params.arch.input_shape) {
    return absl::InvalidArgumentError(
        absl::StrCat("input shape ", ShapeToString(x.shape()),
                     " does not match arch input ",
                     ShapeToString(params.arch.input_shape)));
  }
  return absl::OkStatus();
}

// Activations of every layer boundary; acts[0] is the input.
absl::StatusOr<std::vector<std::vector<double>>> RunForward(
    const ModelParams& params, const std::vector<LayerPlan>& plan,
    const Tensor& x) {
  if (absl::Status s = ValidateInput(params, plan, x); !s.ok()) return s;
  std::vector<std::vector<double>> acts;
  acts.reserve(plan.size() + 1);
  acts.emplace_back(x.data().begin(), x.data().end());
  const double* theta = params.theta.data();
  for (const LayerPlan& step : plan) {
    const std::vector<double>& in = acts.back();
    std::vector<double> out(ShapeSize(step.out_shape));
    const double* w = theta + step.param_offset;
    const double* b = w + step.weight_count;
    std::visit(Overloaded{
                   [&](const DenseLayer& d) {
                     DenseForward(d, w, b, in.data(), out.data());
                   },
                   [&](const Conv2dLayer& c) {
                     ConvForward(c, step.in_shape, step.out_shape, w, b,
                                 in.data(), out.data());
                   },
                   [&](const ReluLayer&) {
                     for (size_t i = 0; i < in.size(); ++i) {
                       out[i] = in[i] > 0.0 ? in[i] : 0.0;
                     }
                   },
                   [&](const FlattenLayer&) { out = in; },
               },
               *step.layer);
    acts.push_back(std::move(out));
  }
  return acts;
}

// Backpropagates d(loss)/d(logits). Accumulates parameter gradients into
// param_grad when non-null and returns d(loss)/d(input).
std::vector<double> RunBackward(const ModelParams& params,
                                const std::vector<LayerPlan>& plan,
                                const std::vector<std::vector<double>>& acts,
                                std::vector<double> d_out,
                                double* param_grad) {
  const double* theta = params.theta.data();
  for (size_t l = plan.size(); l-- > 0;) {
    const LayerPlan& step = plan[l];
    const std::vector<double>& in = acts[l];
    std::vector<double> d_in(in.size());
    const double* w = theta + step.param_offset;
    double* d_w =
        param_grad != nullptr ? param_grad + step.param_offset : nullptr;
    double* d_b = d_w != nullptr ? d_w + step.weight_count : nullptr;
    std::visit(Overloaded{
                   [&](const DenseLayer& d) {
                     DenseBackward(d, w, in.data(), d_out.data(), d_in.data(),
                                   d_w, d_b);
                   },
                   [&](const Conv2dLayer& c) {
                     ConvBackward(c, step.in_shape, step.out_shape, w,
                                  in.data(), d_out.data(), d_in.data(), d_w,
                                  d_b);
                   },
                   [&](const ReluLayer&) {
                     for (size_t i = 0; i < in.size(); ++i) {
                       d_in[i] = in[i] > 0.0 ? d_out[i] : 0.0;
                     }
                   },
                   [&](const FlattenLayer&) { d_in = d_out; },
               },
               *step.layer);
    d_out = std::move(d_in);
  }
  return d_out;
}

absl::Status ValidateLabel(const ModelArch& arch, int label) {
  if (label < 0 || static_cast<size_t>(label) >= arch.num_classes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "label ", label, " outside [0, ", arch.num_classes, ")"));
  }
  return absl::OkStatus();
}

// Softmax minus one-hot: d(cross entropy)/d(logits).
std::vector<double> CrossEntropyGradient(std::span<const double> logits,
                                         int label) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> grad(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    grad[i] = std::exp(logits[i] - m);
    z += grad[i];
  }
  for (double& g : grad) g /= z;
  grad[label] -= 1.0;
  return grad;
}

absl::StatusOr<LossAndGradient> Differentiate(const ModelParams& params,
                                              const Sample& sample,
                                              bool wrt_params) {
  absl::StatusOr<std::vector<LayerPlan>> plan = BuildPlan(params.arch);
  if (!plan.ok()) return plan.status();
  if (absl::Status s = ValidateLabel(params.arch, sample.label); !s.ok()) {
    return s;
  }
  absl::StatusOr<std::vector<std::vector<double>>> acts =
      RunForward(params, *plan, sample.x);
  if (!acts.ok()) return acts.status();
  const std::vector<double>& logits = acts->back();
  LossAndGradient result;
  result.loss = CrossEntropy(logits, sample.label);
  std::vector<double> d_logits = CrossEntropyGradient(logits, sample.label);
  if (wrt_params) {
    result.gradient.assign(params.theta.size(), 0.0);
    RunBackward(params, *plan, *acts, std::move(d_logits),
                result.gradient.data());
  } else {
    result.gradient =
        RunBackward(params, *plan, *acts, std::move(d_logits), nullptr);
  }
  return result;
}

}  // namespace

size_t ShapeSize(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string ShapeToString(const Shape& shape) {
  return absl::StrCat("[", absl::StrJoin(shape, "x"), "]");
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(ShapeSize(shape_), 0.0) {}

absl::StatusOr<Tensor> Tensor::FromData(Shape shape, std::vector<double> data) {
  if (shape.empty() ||
      std::any_of(shape.begin(), shape.end(), [](size_t d) { return d == 0; })) {
    return absl::InvalidArgumentError(
        absl::StrCat("tensor dims must be positive, got ", ShapeToString(shape)));
  }
  if (ShapeSize(shape) != data.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape ", ShapeToString(shape), " needs ", ShapeSize(shape),
                     " values, got ", data.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("tensor entries must be finite");
    }
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

absl::Status ValidateArch(const ModelArch& arch) {
  return BuildPlan(arch).status();
}

absl::StatusOr<size_t> ParameterCount(const ModelArch& arch) {
  absl::StatusOr<std::vector<LayerPlan>> plan = BuildPlan(arch);
  if (!plan.ok()) return plan.status();
  return PlanParameterCount(*plan);
}

std::string LayersToString(const std::vector<Layer>& layers) {
  return absl::StrJoin(
      layers, ",", [](std::string* out, const Layer& layer) {
        std::visit(Overloaded{
                       [&](const DenseLayer& d) {
                         absl::StrAppend(out, "dense:", d.in, ":", d.out);
                       },
                       [&](const Conv2dLayer& c) {
                         absl::StrAppend(out, "conv2d:", c.in_channels, ":",
                                         c.out_channels, ":", c.kernel, ":",
                                         c.stride);
                       },
                       [&](const ReluLayer&) { absl::StrAppend(out, "relu"); },
                       [&](const FlattenLayer&) {
                         absl::StrAppend(out, "flatten");
                       },
                   },
                   layer);
      });
}

absl::StatusOr<std::vector<Layer>> ParseLayers(absl::string_view text) {
  std::vector<Layer> layers;
  for (absl::string_view token :
       absl::StrSplit(text, ',', absl::SkipWhitespace())) {
    token = absl::StripAsciiWhitespace(token);
    std::vector<absl::string_view> parts = absl::StrSplit(token, ':');
    std::vector<size_t> dims;
    for (size_t i = 1; i < parts.size(); ++i) {
      size_t v = 0;
      if (!absl::SimpleAtoi(parts[i], &v)) {
        return absl::InvalidArgumentError(
            absl::StrCat("bad layer dimension in '", token, "'"));
      }
      dims.push_back(v);
    }
    if (parts[0] == "dense" && dims.size() == 2) {
      layers.push_back(DenseLayer{dims[0], dims[1]});
    } else if (parts[0] == "conv2d" && dims.size() == 4) {
      layers.push_back(Conv2dLayer{dims[0], dims[1], dims[2], dims[3]});
    } else if (parts[0] == "relu" && dims.empty()) {
      layers.push_back(ReluLayer{});
    } else if (parts[0] == "flatten" && dims.empty()) {
      layers.push_back(FlattenLayer{});
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unrecognized layer '", token, "'"));
    }
  }
  if (layers.empty()) return absl::InvalidArgumentError("empty layer list");
  return layers;
}

absl::StatusOr<ModelArch> DefaultArch(const Shape& input_shape,
                                      size_t num_classes) {
  ModelArch arch{.input_shape = input_shape, .num_classes = num_classes};
  if (input_shape.size() == 1) {
    arch.layers = {DenseLayer{input_shape[0], 32}, ReluLayer{},
                   DenseLayer{32, num_classes}};
  } else if (input_shape.size() == 3 && input_shape[1] >= 3 &&
             input_shape[2] >= 3) {
    const size_t oh = (input_shape[1] - 3) / 2 + 1;
    const size_t ow = (input_shape[2] - 3) / 2 + 1;
    arch.layers = {Conv2dLayer{input_shape[0], 8, 3, 2}, ReluLayer{},
                   FlattenLayer{}, DenseLayer{8 * oh * ow, num_classes}};
  } else {
    return absl::InvalidArgumentError(absl::StrCat(
        "no default arch for input shape ", ShapeToString(input_shape)));
  }
  if (absl::Status s = ValidateArch(arch); !s.ok()) return s;
  return arch;
}

absl::StatusOr<ModelParams> InitializeParams(const ModelArch& arch,
                                             NoiseStream& rng) {
  absl::StatusOr<std::vector<LayerPlan>> plan = BuildPlan(arch);
  if (!plan.ok()) return plan.status();
  ModelParams params{.arch = arch};
  params.theta.reserve(PlanParameterCount(*plan));
  for (const LayerPlan& step : *plan) {
    if (step.weight_count == 0) continue;
    const size_t fan_in = std::visit(
        Overloaded{
            [](const DenseLayer& d) { return d.in; },
            [](const Conv2dLayer& c) {
              return c.in_channels * c.kernel * c.kernel;
            },
            [](const auto&) { return size_t{1}; },
        },
        *step.layer);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (size_t i = 0; i < step.weight_count + step.bias_count; ++i) {
      params.theta.push_back(rng.Uniform(-bound, bound));
    }
  }
  return params;
}

absl::StatusOr<std::vector<double>> Forward(const ModelParams& params,
                                            const Tensor& x) {
  absl::StatusOr<std::vector<LayerPlan>> plan = BuildPlan(params.arch);
  if (!plan.ok()) return plan.status();
  absl::StatusOr<std::vector<std::vector<double>>> acts =
      RunForward(params, *plan, x);
  if (!acts.ok()) return acts.status();
  return std::move(acts->back());
}

double CrossEntropy(std::span<const double> logits, int label) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  // Clamp rounding-level negatives only; a NaN must propagate.
  const double loss = m + std::log(z) - logits[label];
  return loss < 0.0 ? 0.0 : loss;
}

absl::StatusOr<LossAndGradient> ParamGradient(const ModelParams& params,
                                              const Sample& sample) {
  return Differentiate(params, sample, /*wrt_params=*/true);
}

absl::StatusOr<LossAndGradient> InputGradient(const ModelParams& params,
                                              const Sample& sample) {
  return Differentiate(params, sample, /*wrt_params=*/false);
}

absl::StatusOr<double> SampleLoss(const ModelParams& params,
                                  const Sample& sample) {
  if (absl::Status s = ValidateLabel(params.arch, sample.label); !s.ok()) {
    return s;
  }
  absl::StatusOr<std::vector<double>> logits = Forward(params, sample.x);
  if (!logits.ok()) return logits.status();
  return CrossEntropy(*logits, sample.label);
}

}  // namespace dpaudit

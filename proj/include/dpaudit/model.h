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

// Dense tensors, a small layer-stack classifier, and its reverse-mode
// gradients with respect to both parameters and input pixels.

#ifndef DPAUDIT_MODEL_H_
#define DPAUDIT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/noise_stream.h"

namespace dpaudit {

using Shape = std::vector<size_t>;

size_t ShapeSize(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Row-major dense tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  static absl::StatusOr<Tensor> FromData(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  size_t size() const { return data_.size(); }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

struct Sample {
  Tensor x;  // pixels in [0, 1]
  int label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DenseLayer {
  size_t in = 0;
  size_t out = 0;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Valid (unpadded) 2-D convolution over a (channels, height, width) input.
struct Conv2dLayer {
  size_t in_channels = 0;
  size_t out_channels = 0;
  size_t kernel = 0;
  size_t stride = 1;
  friend bool operator==(const Conv2dLayer&, const Conv2dLayer&) = default;
};

struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

struct FlattenLayer {
  friend bool operator==(const FlattenLayer&, const FlattenLayer&) = default;
};

using Layer = std::variant<DenseLayer, Conv2dLayer, ReluLayer, FlattenLayer>;

struct ModelArch {
  Shape input_shape;
  std::vector<Layer> layers;
  size_t num_classes = 0;

  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

// Checks that consecutive layer shapes compose and that the network ends in a
// vector of num_classes logits.
absl::Status ValidateArch(const ModelArch& arch);
absl::StatusOr<size_t> ParameterCount(const ModelArch& arch);

// Textual arch descriptor, e.g. "dense:64:32,relu,dense:32:2" or
// "conv2d:1:8:3:2,relu,flatten,dense:1352:10".
std::string LayersToString(const std::vector<Layer>& layers);
absl::StatusOr<std::vector<Layer>> ParseLayers(absl::string_view text);

// dense(d->32) -> relu -> dense(32->classes) for vector inputs;
// conv2d(c->8, k3, s2) -> relu -> flatten -> dense(->classes) for images.
absl::StatusOr<ModelArch> DefaultArch(const Shape& input_shape,
                                      size_t num_classes);

struct ModelParams {
  ModelArch arch;
  std::vector<double> theta;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Weights and biases of each layer drawn uniform(-1/sqrt(fan_in),
// +1/sqrt(fan_in)), in layer order, weights before biases.
absl::StatusOr<ModelParams> InitializeParams(const ModelArch& arch,
                                             NoiseStream& rng);

absl::StatusOr<std::vector<double>> Forward(const ModelParams& params,
                                            const Tensor& x);

// -log softmax(logits)[label], stabilized by max subtraction. label must be a
// valid index into logits.
double CrossEntropy(std::span<const double> logits, int label);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Gradient of CrossEntropy(Forward(params, x), y) with respect to theta.
absl::StatusOr<LossAndGradient> ParamGradient(const ModelParams& params,
                                              const Sample& sample);

// Gradient with respect to the input pixels, row-major in the input shape.
absl::StatusOr<LossAndGradient> InputGradient(const ModelParams& params,
                                              const Sample& sample);

// Loss only (one forward pass).
absl::StatusOr<double> SampleLoss(const ModelParams& params,
                                  const Sample& sample);

}  // namespace dpaudit

#endif  // DPAUDIT_MODEL_H_

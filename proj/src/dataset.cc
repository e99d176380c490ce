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

#include "dpaudit/dataset.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/string_view.h"
#include "absl/strings/str_cat.h"
#include "dpaudit/model_io.h"
#include "dpaudit/noise_stream.h"

namespace dpaudit {
namespace {

constexpr uint32_t kImagesMagic = 0x00000803;
constexpr uint32_t kLabelsMagic = 0x00000801;
constexpr double kBlobNoise = 0.5;

absl::StatusOr<uint32_t> ReadBigEndian32(absl::string_view buf, size_t offset,
                                         absl::string_view what) {
  if (buf.size() < offset + 4) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, ": truncated header at byte ", offset));
  }
  uint32_t v = 0;
  for (size_t i = 0; i < 4; ++i) {
    v = (v << 8) | static_cast<uint8_t>(buf[offset + i]);
  }
  return v;
}

}  // namespace

absl::StatusOr<Dataset> DecodeMnistIdx(absl::string_view images,
                                       absl::string_view labels, size_t limit) {
  absl::StatusOr<uint32_t> image_magic = ReadBigEndian32(images, 0, "images");
  if (!image_magic.ok()) return image_magic.status();
  if (*image_magic != kImagesMagic) {
    return absl::InvalidArgumentError(absl::StrCat(
        "images: bad magic 0x", absl::Hex(*image_magic, absl::kZeroPad8),
        " at byte 0"));
  }
  absl::StatusOr<uint32_t> label_magic = ReadBigEndian32(labels, 0, "labels");
  if (!label_magic.ok()) return label_magic.status();
  if (*label_magic != kLabelsMagic) {
    return absl::InvalidArgumentError(absl::StrCat(
        "labels: bad magic 0x", absl::Hex(*label_magic, absl::kZeroPad8),
        " at byte 0"));
  }
  absl::StatusOr<uint32_t> count = ReadBigEndian32(images, 4, "images");
  absl::StatusOr<uint32_t> rows = ReadBigEndian32(images, 8, "images");
  absl::StatusOr<uint32_t> cols = ReadBigEndian32(images, 12, "images");
  absl::StatusOr<uint32_t> label_count = ReadBigEndian32(labels, 4, "labels");
  for (const absl::StatusOr<uint32_t>* v : {&count, &rows, &cols, &label_count}) {
    if (!v->ok()) return v->status();
  }
  if (*label_count != *count) {
    return absl::InvalidArgumentError(
        absl::StrCat("labels: count ", *label_count, " at byte 4 does not match ",
                     *count, " images"));
  }
  if (*rows == 0 || *cols == 0) {
    return absl::InvalidArgumentError("images: zero-sized image at byte 8");
  }
  const size_t pixels = static_cast<size_t>(*rows) * *cols;
  const size_t image_bytes = 16 + static_cast<size_t>(*count) * pixels;
  if (images.size() < image_bytes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "images: truncated at byte ", images.size(), ", expected ", image_bytes));
  }
  const size_t label_bytes = 8 + static_cast<size_t>(*count);
  if (labels.size() < label_bytes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "labels: truncated at byte ", labels.size(), ", expected ", label_bytes));
  }
  size_t n = *count;
  if (limit > 0) n = std::min(n, limit);
  Dataset data;
  data.reserve(n);
  const Shape shape = {1, *rows, *cols};
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> x(pixels);
    const size_t base = 16 + i * pixels;
    for (size_t j = 0; j < pixels; ++j) {
      x[j] = static_cast<uint8_t>(images[base + j]) / 255.0;
    }
    absl::StatusOr<Tensor> t = Tensor::FromData(shape, std::move(x));
    if (!t.ok()) return t.status();
    data.push_back(
        Sample{.x = *std::move(t), .label = static_cast<uint8_t>(labels[8 + i])});
  }
  return data;
}

absl::StatusOr<Dataset> LoadMnistIdx(const std::string& images_path,
                                     const std::string& labels_path,
                                     size_t limit) {
  absl::StatusOr<std::string> images = ReadFileBytes(images_path);
  if (!images.ok()) return images.status();
  absl::StatusOr<std::string> labels = ReadFileBytes(labels_path);
  if (!labels.ok()) return labels.status();
  return DecodeMnistIdx(*images, *labels, limit);
}

absl::StatusOr<Dataset> MakeSynthetic(size_t dim, size_t classes, size_t size,
                                      uint64_t seed) {
  if (dim == 0 || classes < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("synthetic data needs dim >= 1 and >= 2 classes, got dim=",
                     dim, " classes=", classes));
  }
  if (size < classes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "synthetic size ", size, " is smaller than class count ", classes));
  }
  NoiseStream rng(seed);
  const double offset = 1.0 / std::sqrt(2.0);
  Dataset data;
  data.reserve(size);
  for (size_t i = 0; i < size; ++i) {
    const int label = static_cast<int>(i % classes);
    const size_t hot = static_cast<size_t>(label) % dim;
    std::vector<double> x(dim);
    for (size_t j = 0; j < dim; ++j) {
      const double z = (j == hot ? offset : 0.0) + kBlobNoise * rng.Gaussian();
      x[j] = std::clamp(0.5 + 0.25 * z, 0.0, 1.0);
    }
    absl::StatusOr<Tensor> t = Tensor::FromData({dim}, std::move(x));
    if (!t.ok()) return t.status();
    data.push_back(Sample{.x = *std::move(t), .label = label});
  }
  return data;
}

}  // namespace dpaudit

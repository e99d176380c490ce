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

#ifndef DPAUDIT_DATASET_H_
#define DPAUDIT_DATASET_H_

#include <cstdint>
#include <string>

#include "absl/strings/string_view.h"
#include "absl/status/statusor.h"
#include "dpaudit/dpsgd.h"

namespace dpaudit {

// Parses MNIST IDX buffers: images (magic 0x00000803, count, rows, cols,
// u8 pixels) and labels (magic 0x00000801, count, u8 labels), all header
// integers big-endian. Pixels are scaled by 1/255 and samples have shape
// (1, rows, cols). `limit` > 0 keeps only the first `limit` samples.
absl::StatusOr<Dataset> DecodeMnistIdx(absl::string_view images,
                                       absl::string_view labels,
                                       size_t limit = 0);

absl::StatusOr<Dataset> LoadMnistIdx(const std::string& images_path,
                                     const std::string& labels_path,
                                     size_t limit = 0);

// Gaussian class blobs in `dim` dimensions. Class c has mean e_{c mod dim} /
// sqrt(2) (pairwise distance 1) and per-coordinate noise N(0, 0.5^2); values
// are mapped to pixels by clamp(0.5 + 0.25 z, 0, 1). Labels are assigned
// round-robin, so every class gets size / classes samples (+1 for the first
// size % classes classes).
absl::StatusOr<Dataset> MakeSynthetic(size_t dim, size_t classes, size_t size,
                                      uint64_t seed);

}  // namespace dpaudit

#endif  // DPAUDIT_DATASET_H_

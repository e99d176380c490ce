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

// Binary containers for models and samples.
//
// Model file:
//   "DPAMODEL" (8 bytes) | version u8 = 1 | input rank u32 | dims u32...
//   | num_classes u32 | layer count u32 | layers | theta count u64
//   | theta as IEEE-754 binary64
// Each layer is a tag byte followed by u32 fields:
//   1 dense (in, out) | 2 conv2d (in_ch, out_ch, kernel, stride)
//   | 3 relu | 4 flatten
//
// Sample file:
//   "DPASAMPL" (8 bytes) | version u8 = 1 | rank u32 | dims u32...
//   | pixel count u64 | pixels as binary64 | label i32
//
// All integers and floats are little-endian regardless of host byte order.

#ifndef DPAUDIT_MODEL_IO_H_
#define DPAUDIT_MODEL_IO_H_

#include <string>

#include "absl/strings/string_view.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpaudit/model.h"

namespace dpaudit {

std::string EncodeModel(const ModelParams& params);
absl::StatusOr<ModelParams> DecodeModel(absl::string_view bytes);

std::string EncodeSample(const Sample& sample);
absl::StatusOr<Sample> DecodeSample(absl::string_view bytes);

absl::Status WriteModelFile(const std::string& path, const ModelParams& params);
absl::StatusOr<ModelParams> ReadModelFile(const std::string& path);

absl::Status WriteSampleFile(const std::string& path, const Sample& sample);
absl::StatusOr<Sample> ReadSampleFile(const std::string& path);

// Whole-file helpers shared by the harness.
absl::Status WriteFileBytes(const std::string& path, absl::string_view bytes);
absl::StatusOr<std::string> ReadFileBytes(const std::string& path);

}  // namespace dpaudit

#endif  // DPAUDIT_MODEL_IO_H_

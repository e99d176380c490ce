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

#include "dpaudit/model_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "absl/strings/string_view.h"
#include "absl/strings/str_cat.h"

namespace dpaudit {
namespace {

constexpr absl::string_view kModelMagic = "DPAMODEL";
constexpr absl::string_view kSampleMagic = "DPASAMPL";
constexpr uint8_t kVersion = 1;

enum LayerTag : uint8_t {
  kDenseTag = 1,
  kConv2dTag = 2,
  kReluTag = 3,
  kFlattenTag = 4,
};

class Writer {
 public:
  void Bytes(absl::string_view b) { out_.append(b.data(), b.size()); }
  void U8(uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void U32(uint32_t v) { Little(v, 4); }
  void U64(uint64_t v) { Little(v, 8); }
  void F64(double v) { U64(std::bit_cast<uint64_t>(v)); }
  void Shape(const dpaudit::Shape& shape) {
    U32(static_cast<uint32_t>(shape.size()));
    for (size_t d : shape) U32(static_cast<uint32_t>(d));
  }
  std::string Take() { return std::move(out_); }

 private:
  void Little(uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(absl::string_view in) : in_(in) {}

  absl::Status Magic(absl::string_view magic) {
    if (in_.substr(0, magic.size()) != magic) {
      return absl::InvalidArgumentError(
          absl::StrCat("bad magic at byte 0, expected ", magic));
    }
    pos_ = magic.size();
    return absl::OkStatus();
  }
  absl::StatusOr<uint8_t> U8() {
    absl::StatusOr<uint64_t> v = Little(1);
    if (!v.ok()) return v.status();
    return static_cast<uint8_t>(*v);
  }
  absl::StatusOr<uint32_t> U32() {
    absl::StatusOr<uint64_t> v = Little(4);
    if (!v.ok()) return v.status();
    return static_cast<uint32_t>(*v);
  }
  absl::StatusOr<uint64_t> U64() { return Little(8); }
  absl::StatusOr<double> F64() {
    absl::StatusOr<uint64_t> v = Little(8);
    if (!v.ok()) return v.status();
    return std::bit_cast<double>(*v);
  }
  absl::StatusOr<dpaudit::Shape> Shape() {
    absl::StatusOr<uint32_t> rank = U32();
    if (!rank.ok()) return rank.status();
    dpaudit::Shape shape;
    for (uint32_t i = 0; i < *rank; ++i) {
      absl::StatusOr<uint32_t> d = U32();
      if (!d.ok()) return d.status();
      shape.push_back(*d);
    }
    return shape;
  }
  size_t pos() const { return pos_; }
  bool AtEnd() const { return pos_ == in_.size(); }

 private:
  absl::StatusOr<uint64_t> Little(int bytes) {
    if (in_.size() - pos_ < static_cast<size_t>(bytes)) {
      return absl::InvalidArgumentError(
          absl::StrCat("truncated input at byte ", pos_));
    }
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += bytes;
    return v;
  }

  absl::string_view in_;
  size_t pos_ = 0;
};

#define DPAUDIT_ASSIGN(lhs, expr)              \
  auto lhs##_or = (expr);                      \
  if (!lhs##_or.ok()) return lhs##_or.status(); \
  auto lhs = *lhs##_or

absl::Status CheckVersion(Reader& r) {
  DPAUDIT_ASSIGN(version, r.U8());
  if (version != kVersion) {
    return absl::InvalidArgumentError(
        absl::StrCat("unsupported version ", version, " at byte ", r.pos() - 1));
  }
  return absl::OkStatus();
}

absl::Status CheckEnd(const Reader& r) {
  if (!r.AtEnd()) {
    return absl::InvalidArgumentError(
        absl::StrCat("trailing bytes after offset ", r.pos()));
  }
  return absl::OkStatus();
}

absl::StatusOr<Layer> ReadLayer(Reader& r) {
  const size_t at = r.pos();
  DPAUDIT_ASSIGN(tag, r.U8());
  switch (tag) {
    case kDenseTag: {
      DPAUDIT_ASSIGN(in, r.U32());
      DPAUDIT_ASSIGN(out, r.U32());
      return DenseLayer{in, out};
    }
    case kConv2dTag: {
      DPAUDIT_ASSIGN(in_ch, r.U32());
      DPAUDIT_ASSIGN(out_ch, r.U32());
      DPAUDIT_ASSIGN(kernel, r.U32());
      DPAUDIT_ASSIGN(stride, r.U32());
      return Conv2dLayer{in_ch, out_ch, kernel, stride};
    }
    case kReluTag:
      return ReluLayer{};
    case kFlattenTag:
      return FlattenLayer{};
    default:
      return absl::InvalidArgumentError(
          absl::StrCat("unknown layer tag ", tag, " at byte ", at));
  }
}

absl::Status WriteAll(const std::string& path, absl::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot open ", path));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) return absl::DataLossError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

}  // namespace

std::string EncodeModel(const ModelParams& params) {
  Writer w;
  w.Bytes(kModelMagic);
  w.U8(kVersion);
  w.Shape(params.arch.input_shape);
  w.U32(static_cast<uint32_t>(params.arch.num_classes));
  w.U32(static_cast<uint32_t>(params.arch.layers.size()));
  for (const Layer& layer : params.arch.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      w.U8(kDenseTag);
      w.U32(static_cast<uint32_t>(d->in));
      w.U32(static_cast<uint32_t>(d->out));
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      w.U8(kConv2dTag);
      w.U32(static_cast<uint32_t>(c->in_channels));
      w.U32(static_cast<uint32_t>(c->out_channels));
      w.U32(static_cast<uint32_t>(c->kernel));
      w.U32(static_cast<uint32_t>(c->stride));
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      w.U8(kReluTag);
    } else {
      w.U8(kFlattenTag);
    }
  }
  w.U64(params.theta.size());
  for (double v : params.theta) w.F64(v);
  return w.Take();
}

absl::StatusOr<ModelParams> DecodeModel(absl::string_view bytes) {
  Reader r(bytes);
  if (absl::Status s = r.Magic(kModelMagic); !s.ok()) return s;
  if (absl::Status s = CheckVersion(r); !s.ok()) return s;
  ModelParams params;
  DPAUDIT_ASSIGN(shape, r.Shape());
  params.arch.input_shape = std::move(shape);
  DPAUDIT_ASSIGN(classes, r.U32());
  params.arch.num_classes = classes;
  DPAUDIT_ASSIGN(layer_count, r.U32());
  for (uint32_t i = 0; i < layer_count; ++i) {
    DPAUDIT_ASSIGN(layer, ReadLayer(r));
    params.arch.layers.push_back(layer);
  }
  if (absl::Status s = ValidateArch(params.arch); !s.ok()) return s;
  const size_t theta_at = r.pos();
  DPAUDIT_ASSIGN(count, r.U64());
  absl::StatusOr<size_t> expected = ParameterCount(params.arch);
  if (!expected.ok()) return expected.status();
  if (count != *expected) {
    return absl::InvalidArgumentError(
        absl::StrCat("theta count ", count, " at byte ", theta_at,
                     " does not match arch (", *expected, ")"));
  }
  params.theta.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    DPAUDIT_ASSIGN(v, r.F64());
    params.theta.push_back(v);
  }
  if (absl::Status s = CheckEnd(r); !s.ok()) return s;
  return params;
}

std::string EncodeSample(const Sample& sample) {
  Writer w;
  w.Bytes(kSampleMagic);
  w.U8(kVersion);
  w.Shape(sample.x.shape());
  w.U64(sample.x.size());
  for (double v : sample.x.data()) w.F64(v);
  w.U32(static_cast<uint32_t>(sample.label));
  return w.Take();
}

absl::StatusOr<Sample> DecodeSample(absl::string_view bytes) {
  Reader r(bytes);
  if (absl::Status s = r.Magic(kSampleMagic); !s.ok()) return s;
  if (absl::Status s = CheckVersion(r); !s.ok()) return s;
  DPAUDIT_ASSIGN(shape, r.Shape());
  const size_t count_at = r.pos();
  DPAUDIT_ASSIGN(count, r.U64());
  if (count != ShapeSize(shape)) {
    return absl::InvalidArgumentError(
        absl::StrCat("pixel count ", count, " at byte ", count_at,
                     " does not match shape ", ShapeToString(shape)));
  }
  std::vector<double> pixels;
  pixels.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    DPAUDIT_ASSIGN(v, r.F64());
    pixels.push_back(v);
  }
  DPAUDIT_ASSIGN(label, r.U32());
  if (absl::Status s = CheckEnd(r); !s.ok()) return s;
  absl::StatusOr<Tensor> x = Tensor::FromData(std::move(shape), std::move(pixels));
  if (!x.ok()) return x.status();
  return Sample{.x = *std::move(x), .label = static_cast<int32_t>(label)};
}

absl::Status WriteFileBytes(const std::string& path, absl::string_view bytes) {
  return WriteAll(path, bytes);
}

absl::StatusOr<std::string> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

absl::Status WriteModelFile(const std::string& path,
                            const ModelParams& params) {
  return WriteAll(path, EncodeModel(params));
}

absl::StatusOr<ModelParams> ReadModelFile(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<ModelParams> params = DecodeModel(*bytes);
  if (!params.ok()) {
    return absl::Status(params.status().code(),
                        absl::StrCat(path, ": ", params.status().message()));
  }
  return params;
}

absl::Status WriteSampleFile(const std::string& path, const Sample& sample) {
  return WriteAll(path, EncodeSample(sample));
}

absl::StatusOr<Sample> ReadSampleFile(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<Sample> sample = DecodeSample(*bytes);
  if (!sample.ok()) {
    return absl::Status(sample.status().code(),
                        absl::StrCat(path, ": ", sample.status().message()));
  }
  return sample;
}

}  // namespace dpaudit

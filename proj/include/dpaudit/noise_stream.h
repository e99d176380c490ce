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

#ifndef DPAUDIT_NOISE_STREAM_H_
#define DPAUDIT_NOISE_STREAM_H_

#include <cstdint>
#include <random>

namespace dpaudit {

// Seeded random stream with a fixed, platform-independent mapping from engine
// output to uniform and Gaussian variates. The standard library distributions
// leave their algorithms unspecified, so they are not used here.
//
// Every variate consumes a fixed number of engine words: Uniform() one,
// Gaussian() two (Box-Muller, cosine branch only). draws() counts engine
// words, which lets callers assert how much randomness an operation used.
class NoiseStream {
 public:
  explicit NoiseStream(uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  // Uniform on [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal.
  double Gaussian();

  uint64_t draws() const { return draws_; }

 private:
  uint64_t NextWord() {
    ++draws_;
    return engine_();
  }

  std::mt19937_64 engine_;
  uint64_t draws_ = 0;
};

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t x);

// Derives an independent stream seed for (base_seed, arm, index).
uint64_t DeriveSeed(uint64_t base_seed, uint64_t arm, uint64_t index);

}  // namespace dpaudit

#endif  // DPAUDIT_NOISE_STREAM_H_

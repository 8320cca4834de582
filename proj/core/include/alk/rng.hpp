/*
 * Copyright 2026 The alk Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace alk {

// All randomness flows through std::mt19937_64, whose output sequence is fixed
// by the C++ standard. Distributions are implemented here (not with <random>
// distribution classes, whose algorithms vary between standard libraries) so
// that a seed reproduces bit-identical samples on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal deviate by inversion of a uniform.
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a hash of a string.
std::uint64_t fnv1a64(std::string_view s);

/// Per-module stream seed: mix64(root ^ fnv1a64(name)).
std::uint64_t sub_seed(std::uint64_t root, std::string_view name);

/// Standard normal CDF and its inverse.
double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace alk

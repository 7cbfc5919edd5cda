// Copyright 2026 The MASP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASP_RNG_H_
#define MASP_RNG_H_

#include <array>
#include <cstdint>
#include <limits>

namespace masp {

// Purpose tags mixed into stream keys so that distinct consumers never share
// a sequence.
enum class StreamKind : std::uint64_t {
  kInit = 1,
  kTarget = 2,
  kSelfPlay = 3,
  kEval = 4,
};

std::uint64_t SplitMix64(std::uint64_t& state);

// xoshiro256** with SplitMix64 seeding. Streams are derived from
// (seed, kind, index) so rollouts are reproducible regardless of the order
// or thread in which they run.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);
  static Rng ForStream(std::uint64_t seed, StreamKind kind,
                       std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n);

  const std::array<std::uint64_t, 4>& state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace masp

#endif  // MASP_RNG_H_

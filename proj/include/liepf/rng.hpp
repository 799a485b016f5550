// Copyright 2026 The liepf Authors
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

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace liepf {

/// Identifiers of the independent random substreams drawn from one seed.
namespace stream {
inline constexpr std::uint64_t kTruth = 1;
inline constexpr std::uint64_t kResampling = 2;
inline constexpr std::uint64_t kTrial = 3;
inline constexpr std::uint64_t kParticleBase = 1ULL << 62;
}  // namespace stream

/// A random substream identified by (seed, stream id). Two substreams with
/// different ids are statistically independent, and a substream's output
/// depends only on its id and how many values it has produced.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }

  Eigen::Vector3d normal3() {
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
      v(i) = normal();
    }
    return v;
  }

  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stream of particle slot k for the window ending at step index
/// `window_end`. Supplies the initial draw (when the window starts at the
/// initial distribution) followed by three normals per simulated step.
inline Rng particle_stream(std::uint64_t seed, std::size_t k, int window_end) {
  return Rng{seed, stream::kParticleBase | (static_cast<std::uint64_t>(window_end) << 32) |
                       static_cast<std::uint64_t>(k & 0xffffffffULL)};
}

/// Stream for the multinomial draws of the resampling step at index j.
inline Rng resampling_stream(std::uint64_t seed, int j) {
  return Rng{seed, stream::kResampling | (static_cast<std::uint64_t>(j) << 8)};
}

/// Seed for trial `trial` of an experiment seeded with `seed`.
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  return Rng{seed, stream::kTrial + (static_cast<std::uint64_t>(trial) << 8)}.next_u64();
}

}  // namespace liepf

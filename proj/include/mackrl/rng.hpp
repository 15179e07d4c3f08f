// Copyright 2026 The MACKRL-CK Authors
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

// Counter-based deterministic random streams.
//
// A stream is a pure function of (key, counter): the n-th draw of a stream
// with a given key is the same in every process, thread and call order.
// Keys are derived from word tuples such as (run seed, episode, timestep,
// node id), so every sampling site owns an independent reproducible stream.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mackrl {

// SplitMix64 finalizer; bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a tuple of words into one key, one mix round per word.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) {
  std::uint64_t k = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
  for (std::uint64_t w : words) k = mix64(k ^ w);
  return k;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  static RngStream from(std::initializer_list<std::uint64_t> words) {
    return RngStream(derive_key(words));
  }

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(ctr_++)); }

  // Uniform double in [0, 1), 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t bits;
    do {
      bits = next_u64();
    } while (bits >= limit);
    return bits % n;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

// Per-episode seed material known to every agent before execution. Streams
// for a given (timestep, node) are identical across agents, which is what
// keeps decentralised sampling coherent.
struct SharedSeed {
  std::uint64_t run_seed = 0;
  std::uint64_t episode = 0;

  RngStream stream(std::uint64_t t, std::uint64_t node_id,
                   std::uint64_t purpose = 0) const {
    return RngStream::from({run_seed, episode, t, node_id, purpose});
  }
};

}  // namespace mackrl

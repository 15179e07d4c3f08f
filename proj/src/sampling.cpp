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

#include "mackrl/sampling.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mackrl {

int heuristic_sample(std::span<const double> dist, double shared_uniform) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (shared_uniform < acc) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size()) - 1;  // guards against rounding at 1.0
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("total_variation: mismatched support");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

int holenstein_sample(std::span<const double> dist, const HolensteinConfig& config) {
  if (config.grid_steps == 0)
    throw std::invalid_argument("holenstein_sample: degenerate grid resolution");
  const std::uint64_t points = config.grid_steps + 1;  // {0, g, 2g, ..., 1}
  const std::uint64_t total = dist.size() * points;
  const double gamma = config.gamma();

  // Lazy Fisher-Yates walk of the shared permutation: position i holds
  // element swap(i, j) with j uniform in [i, total). Displacements are kept
  // in a sparse map, so the expected work is O(|U|) per call instead of
  // materialising all |U|*(grid_steps+1) elements.
  RngStream rng(config.permutation_key);
  std::unordered_map<std::uint64_t, std::uint64_t> moved;
  auto value_at = [&](std::uint64_t pos) {
    auto it = moved.find(pos);
    return it == moved.end() ? pos : it->second;
  };
  for (std::uint64_t i = 0; i < total; ++i) {
    const std::uint64_t j = i + rng.next_below(total - i);
    const std::uint64_t vi = value_at(i);
    const std::uint64_t vj = value_at(j);
    moved[j] = vi;
    // vj is the i-th element of the permutation.
    const auto action = static_cast<int>(vj / points);
    const double p = static_cast<double>(vj % points) * gamma;
    if (p < dist[action]) return action;
  }
  throw std::logic_error("holenstein_sample: acceptance set empty");
}

}  // namespace mackrl

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

// Correlated sampling: drawing from two similar categorical distributions
// with shared randomness so that the samples rarely disagree. Two couplers
// are provided: the inverse-CDF heuristic (one shared uniform) and
// Holenstein's strategy over a shared random permutation of a quantised
// (action, probability) grid, whose disagreement is at most 2d/(1+d) for
// total variation distance d.

#pragma once

#include <cstdint>
#include <span>

#include "mackrl/rng.hpp"

namespace mackrl {

// Inverse-CDF coupling: returns the unique index u with
// sum_{<u} p <= shared_uniform < sum_{<=u} p, under canonical action order.
// Agents holding identical distributions and the same uniform always agree.
int heuristic_sample(std::span<const double> dist, double shared_uniform);

// (1/2) sum |p_i - q_i|. Throws on mismatched support sizes.
double total_variation(std::span<const double> a, std::span<const double> b);

struct HolensteinConfig {
  // Grid resolution gamma = 1 / grid_steps; the grid is {0, gamma, ..., 1}.
  std::uint64_t grid_steps = 1024;
  // Key of the shared permutation stream; both agents must derive it from the
  // same SharedSeed material.
  std::uint64_t permutation_key = 0;

  double gamma() const { return 1.0 / static_cast<double>(grid_steps); }
};

// Walks the shared random permutation of U x Gamma and returns the action of
// the first element (u, p) with p < dist[u]. Throws a degenerate-resolution
// error if grid_steps == 0.
int holenstein_sample(std::span<const double> dist, const HolensteinConfig& config);

}  // namespace mackrl

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

#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "mackrl/sampling.hpp"

using namespace mackrl;

TEST_CASE("inverse-CDF coupling follows the half-open interval convention") {
  const std::vector<double> pa = {0.6, 0.4};
  const std::vector<double> pb = {0.5, 0.5};
  // delta = 0.55 sits in [0.5, 0.6): agent a picks 0, agent b picks 1
  CHECK(heuristic_sample(pa, 0.55) == 0);
  CHECK(heuristic_sample(pb, 0.55) == 1);
  // boundary: delta = 0.6 leaves a's first interval
  CHECK(heuristic_sample(pa, 0.6) == 1);
  CHECK(heuristic_sample(pa, 0.0) == 0);
}

TEST_CASE("identical distributions and a shared uniform always agree") {
  RngStream rng = RngStream::from({21});
  const std::vector<double> p = {0.2, 0.5, 0.3};
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_double();
    const int a = heuristic_sample(p, u);
    CHECK(heuristic_sample(p, u) == a);
  }
}

TEST_CASE("total variation distance") {
  CHECK(total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) ==
        0.0);
  CHECK(total_variation(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) ==
        1.0);
  CHECK(total_variation(std::vector<double>{0.6, 0.4}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(0.1));
  CHECK_THROWS_AS(
      total_variation(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}),
      std::invalid_argument);
}

TEST_CASE("holenstein sampling agrees on identical distributions") {
  const std::vector<double> p = {0.3, 0.45, 0.25};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    HolensteinConfig cfg;
    cfg.grid_steps = 256;
    cfg.permutation_key = derive_key({0x77, seed});
    const int a = holenstein_sample(p, cfg);
    const int b = holenstein_sample(p, cfg);
    CHECK(a == b);
    CHECK(a >= 0);
    CHECK(a < 3);
  }
}

TEST_CASE("holenstein rejects a degenerate grid") {
  HolensteinConfig cfg;
  cfg.grid_steps = 0;
  CHECK_THROWS_AS(holenstein_sample(std::vector<double>{1.0}, cfg),
                  std::invalid_argument);
}

TEST_CASE("the worked disagreement region has probability 0.1") {
  // dist_a = (0.6, 0.4), dist_b = (0.5, 0.5): they disagree iff the shared
  // uniform lands in [0.5, 0.6)
  const std::vector<double> pa = {0.6, 0.4};
  const std::vector<double> pb = {0.5, 0.5};
  RngStream rng = RngStream::from({31});
  const long trials = 100000;
  long disagree = 0;
  for (long i = 0; i < trials; ++i) {
    const double u = rng.next_double();
    if (heuristic_sample(pa, u) != heuristic_sample(pb, u)) ++disagree;
  }
  const double rate = static_cast<double>(disagree) / trials;
  CHECK(rate == doctest::Approx(0.1).epsilon(0.1));
}

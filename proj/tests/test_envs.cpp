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

#include <cmath>
#include <stdexcept>

#include "mackrl/envs/gridworld.hpp"
#include "mackrl/envs/matrix_game.hpp"

using namespace mackrl;

TEST_CASE("payoff entries match the published tables (1-based spot checks)") {
  CHECK(matrix_payoff(GameId::kA, 0, 0) == 1.0);   // A(1,1) = 5/5
  CHECK(matrix_payoff(GameId::kB, 2, 2) == 0.8);   // B(3,3) = 4/5
  CHECK(matrix_payoff(GameId::kA, 2, 0) == 0.0);   // A(3,1) = 0
  CHECK(matrix_payoff(GameId::kB, 0, 4) == 1.0);   // B(1,5) = 5/5
  CHECK_THROWS_AS(matrix_payoff(GameId::kA, 5, 0), std::out_of_range);
  CHECK_THROWS_AS(matrix_payoff(GameId::kA, 0, -1), std::out_of_range);
}

TEST_CASE("the calibration identity ties p_sigma to p_ck") {
  MatrixGameConfig cfg;
  cfg.ck_fraction = 0.5 / 0.75;  // p_ck = 0.5
  CHECK(cfg.p_ck() == doctest::Approx(0.5));
  CHECK(cfg.p_sigma() == doctest::Approx(0.5));
  // observation rate p_ck + (1-p_ck) p_sigma stays 0.75 across the sweep
  for (double f : {0.0, 0.3, 0.7, 1.0}) {
    cfg.ck_fraction = f;
    CHECK(cfg.p_ck() + (1 - cfg.p_ck()) * cfg.p_sigma() == doctest::Approx(0.75));
  }
}

TEST_CASE("a set bit reveals the game to both agents (no noise)") {
  MatrixGameConfig cfg;
  cfg.ck_fraction = 1.0;
  RngStream rng = RngStream::from({41});
  int set_bits = 0;
  for (int i = 0; i < 2000; ++i) {
    const MatrixState s = matrix_reset(cfg, rng);
    if (!s.ck_bit) continue;
    ++set_bits;
    for (int a = 0; a < 2; ++a) {
      CHECK(s.obs[a].ck_bit);
      CHECK(s.obs[a].game_channel == static_cast<int>(s.game));
    }
  }
  CHECK(set_bits > 1000);  // p_ck = 0.75
}

TEST_CASE("without the bit, private draws are independent and correct") {
  MatrixGameConfig cfg;
  cfg.ck_fraction = 0.0;  // p_sigma = 0.75, bit never set
  RngStream rng = RngStream::from({42});
  const int trials = 20000;
  int seen1 = 0, seen2 = 0, seen_both = 0;
  for (int i = 0; i < trials; ++i) {
    const MatrixState s = matrix_reset(cfg, rng);
    CHECK_FALSE(s.ck_bit);
    for (int a = 0; a < 2; ++a) {
      if (s.obs[a].game_channel != kGameChannelNone)
        CHECK(s.obs[a].game_channel == static_cast<int>(s.game));
    }
    seen1 += s.obs[0].game_channel != kGameChannelNone;
    seen2 += s.obs[1].game_channel != kGameChannelNone;
    seen_both += s.obs[0].game_channel != kGameChannelNone &&
                 s.obs[1].game_channel != kGameChannelNone;
  }
  const double sigma = std::sqrt(0.75 * 0.25 / trials);
  CHECK(std::abs(seen1 / double(trials) - 0.75) < 4 * sigma);
  CHECK(std::abs(seen2 / double(trials) - 0.75) < 4 * sigma);
  const double sigma_both = std::sqrt(0.5625 * (1 - 0.5625) / trials);
  CHECK(std::abs(seen_both / double(trials) - 0.5625) < 4 * sigma_both);
}

TEST_CASE("bit flips corrupt the believed common knowledge") {
  MatrixGameConfig cfg;
  cfg.ck_fraction = 1.0;
  cfg.flip_p = 1.0;  // every observed bit is inverted
  RngStream rng = RngStream::from({43});
  for (int i = 0; i < 200; ++i) {
    const MatrixState s = matrix_reset(cfg, rng);
    for (int a = 0; a < 2; ++a) {
      CHECK(s.obs[a].ck_bit != s.ck_bit);
      if (s.ck_bit) {
        // true game identity still delivered, mistaken as a private draw
        CHECK(s.obs[a].game_channel == static_cast<int>(s.game));
      }
    }
  }
}

TEST_CASE("observation encodings") {
  std::vector<double> out(kMatrixCkInputDim);
  encode_matrix_ck(true, 0, out);
  CHECK(out == std::vector<double>{1, 1, 0});
  encode_matrix_ck(false, 0, out);  // no believed CK: game flags suppressed
  CHECK(out == std::vector<double>{0, 0, 0});
  encode_matrix_ck(true, kGameChannelNone, out);
  CHECK(out == std::vector<double>{1, 0, 0});
  encode_matrix_obs(MatrixObservation{false, 1}, out);
  CHECK(out == std::vector<double>{0, 0, 1});
}

TEST_CASE("exact return enumeration matches a hand-computed profile") {
  MatrixGameConfig cfg;
  cfg.ck_fraction = 0.0;  // p_sigma = 0.75
  // agent 1 always plays row 1; agent 2 answers a seen B with column 5:
  // value = 1/2 (1 + p_sigma)
  const double v = matrix_exact_return(cfg, [](int agent, const MatrixObservation& o) {
    if (agent == 0) return 0;
    return o.game_channel == 1 ? 4 : 0;
  });
  CHECK(v == doctest::Approx(0.5 * (1 + 0.75)));
}

// --- gridworld ----------------------------------------------------------------

TEST_CASE("gridworld movement, penalties and bounds") {
  GridWorldConfig cfg;
  cfg.num_agents = 2;
  cfg.num_prey = 1;
  GridWorld world(cfg);
  RngStream rng = RngStream::from({51});
  world.reset(rng);
  CHECK_FALSE(world.done());
  CHECK(world.prey_remaining() == 1);

  const double r = world.step(std::vector<int>{4, 4});  // both stay
  CHECK(r == doctest::Approx(cfg.step_penalty));
  CHECK(world.t() == 1);
  CHECK_THROWS_AS(world.step(std::vector<int>{6, 0}), std::invalid_argument);
  CHECK_THROWS_AS(world.step(std::vector<int>{0}), std::invalid_argument);
}

TEST_CASE("capture needs two adjacent agents in the same step") {
  GridWorldConfig cfg;
  cfg.width = 4;
  cfg.height = 4;
  cfg.num_agents = 2;
  cfg.num_prey = 1;
  cfg.fov_radius = 10.0;
  GridWorld world(cfg);

  // find a layout where both agents start adjacent to the prey
  bool found = false;
  std::uint64_t layout_seed = 0;
  for (std::uint64_t seed = 0; seed < 4000 && !found; ++seed) {
    RngStream rng = RngStream::from({52, seed});
    world.reset(rng);
    const auto& prey = world.state().at(2);
    int adjacent = 0;
    for (int a = 0; a < 2; ++a) {
      const auto& ag = world.state().at(a);
      const int dist = std::abs(int(ag.features[0] - prey.features[0])) +
                       std::abs(int(ag.features[1] - prey.features[1]));
      adjacent += dist <= 1;
    }
    if (adjacent == 2) {
      found = true;
      layout_seed = seed;
    }
  }
  REQUIRE(found);

  // one lone capturer earns nothing
  RngStream rng1 = RngStream::from({52, layout_seed});
  world.reset(rng1);
  double r = world.step(std::vector<int>{5, 4});
  CHECK(r == doctest::Approx(cfg.step_penalty));
  CHECK(world.prey_remaining() == 1);

  // both capturing remove the prey and earn the reward; episode ends
  RngStream rng2 = RngStream::from({52, layout_seed});
  world.reset(rng2);
  r = world.step(std::vector<int>{5, 5});
  CHECK(r == doctest::Approx(cfg.step_penalty + cfg.capture_reward));
  CHECK(world.prey_remaining() == 0);
  CHECK(world.done());
}

TEST_CASE("episodes terminate at the horizon") {
  GridWorldConfig cfg;
  cfg.num_agents = 2;
  cfg.num_prey = 1;
  cfg.horizon = 5;
  GridWorld world(cfg);
  RngStream rng = RngStream::from({53});
  world.reset(rng);
  int steps = 0;
  while (!world.done()) {
    world.step(std::vector<int>{4, 4});
    ++steps;
  }
  CHECK(steps == 5);
}

TEST_CASE("two nearby agents share common knowledge of each other") {
  GridWorldConfig cfg;
  cfg.num_agents = 2;
  cfg.num_prey = 0;
  cfg.width = 3;
  cfg.height = 3;
  cfg.fov_radius = 5.0;  // covers the whole grid
  GridWorld world(cfg);
  RngStream rng = RngStream::from({54});
  world.reset(rng);
  const CommonKnowledgeSet ck = common_knowledge(world.state(), {0, 1}, world.mask());
  CHECK(ck.entities == EntityIdSet{0, 1});
}

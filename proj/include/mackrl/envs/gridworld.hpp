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

// Field-of-view gridworld: agents with a commonly known circular view radius
// hunt static prey on a rectangular grid. A prey is captured (+1 team
// reward) only when at least two adjacent agents select the capture action
// in the same step, which forces pairwise coordination. Observations are
// exactly the entity records inside the observer's radius.

#pragma once

#include <span>
#include <vector>

#include "mackrl/ck.hpp"
#include "mackrl/rng.hpp"

namespace mackrl {

struct GridWorldConfig {
  int width = 8;
  int height = 8;
  int num_agents = 4;
  int num_prey = 2;
  double fov_radius = 2.5;
  int horizon = 40;
  double capture_reward = 1.0;
  double step_penalty = -0.01;

  int num_entities() const { return num_agents + num_prey; }
};

class GridWorld {
 public:
  // Actions: 0 north, 1 south, 2 east, 3 west, 4 stay, 5 capture.
  static constexpr int kNumActions = 6;
  static constexpr int kFeatureDim = 3;  // x, y, kind (agent=1, prey=0)

  explicit GridWorld(const GridWorldConfig& config);

  void reset(RngStream& rng);
  // Simultaneous moves (off-grid moves are no-ops), then capture resolution.
  // Returns the team reward. Throws on invalid action ids.
  double step(std::span<const int> joint_action);

  bool done() const { return done_; }
  int t() const { return t_; }
  int prey_remaining() const;
  const GridWorldConfig& config() const { return cfg_; }
  const WorldState& state() const { return state_; }
  const VisibilityMask& mask() const { return mask_; }

  // z^a = { s^e : e in M^a }.
  std::vector<EntityState> observation(int agent) const;

 private:
  GridWorldConfig cfg_;
  VisibilityMask mask_;
  WorldState state_;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace mackrl

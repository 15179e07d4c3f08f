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

#include "mackrl/envs/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mackrl {

GridWorld::GridWorld(const GridWorldConfig& config)
    : cfg_(config), mask_(VisibilityMask::circular(config.fov_radius)) {
  if (cfg_.width < 2 || cfg_.height < 2)
    throw std::invalid_argument("GridWorld: grid too small");
  if (cfg_.num_agents < 1 || cfg_.num_prey < 0)
    throw std::invalid_argument("GridWorld: bad entity counts");
  if (cfg_.num_entities() > cfg_.width * cfg_.height)
    throw std::invalid_argument("GridWorld: more entities than cells");
}

void GridWorld::reset(RngStream& rng) {
  // Distinct random cells via a partial shuffle of the cell index space.
  const int cells = cfg_.width * cfg_.height;
  std::vector<int> deck(cells);
  for (int i = 0; i < cells; ++i) deck[i] = i;
  state_.entities.clear();
  for (int e = 0; e < cfg_.num_entities(); ++e) {
    const int j = e + static_cast<int>(rng.next_below(cells - e));
    std::swap(deck[e], deck[j]);
    EntityState ent;
    ent.id = e;
    ent.is_agent = e < cfg_.num_agents;
    ent.features = {static_cast<double>(deck[e] % cfg_.width),
                    static_cast<double>(deck[e] / cfg_.width),
                    ent.is_agent ? 1.0 : 0.0};
    state_.entities.push_back(std::move(ent));
  }
  t_ = 0;
  done_ = false;
}

int GridWorld::prey_remaining() const {
  int n = 0;
  for (const auto& e : state_.entities)
    if (!e.is_agent) ++n;
  return n;
}

double GridWorld::step(std::span<const int> joint_action) {
  if (done_) throw std::logic_error("GridWorld::step: episode finished");
  if (static_cast<int>(joint_action.size()) != cfg_.num_agents)
    throw std::invalid_argument("GridWorld::step: joint action size mismatch");
  for (int u : joint_action)
    if (u < 0 || u >= kNumActions)
      throw std::invalid_argument("GridWorld::step: invalid action id");

  static constexpr int dx[kNumActions] = {0, 0, 1, -1, 0, 0};
  static constexpr int dy[kNumActions] = {-1, 1, 0, 0, 0, 0};
  for (int a = 0; a < cfg_.num_agents; ++a) {
    EntityState* ent = const_cast<EntityState*>(state_.find(a));
    const int nx = static_cast<int>(ent->features[0]) + dx[joint_action[a]];
    const int ny = static_cast<int>(ent->features[1]) + dy[joint_action[a]];
    if (nx >= 0 && nx < cfg_.width && ny >= 0 && ny < cfg_.height) {
      ent->features[0] = nx;
      ent->features[1] = ny;
    }
  }

  double reward = cfg_.step_penalty;
  std::vector<EntityId> captured;
  for (const auto& prey : state_.entities) {
    if (prey.is_agent) continue;
    int capturers = 0;
    for (int a = 0; a < cfg_.num_agents; ++a) {
      if (joint_action[a] != 5) continue;
      const EntityState& ag = state_.at(a);
      const int dist = std::abs(static_cast<int>(ag.features[0] - prey.features[0])) +
                       std::abs(static_cast<int>(ag.features[1] - prey.features[1]));
      if (dist <= 1) ++capturers;
    }
    if (capturers >= 2) {
      captured.push_back(prey.id);
      reward += cfg_.capture_reward;
    }
  }
  for (EntityId id : captured) {
    state_.entities.erase(
        std::find_if(state_.entities.begin(), state_.entities.end(),
                     [id](const EntityState& e) { return e.id == id; }));
  }

  ++t_;
  if (prey_remaining() == 0 || t_ >= cfg_.horizon) done_ = true;
  return reward;
}

std::vector<EntityState> GridWorld::observation(int agent) const {
  const EntityState& a = state_.at(agent);
  std::vector<EntityState> out;
  for (const auto& e : state_.entities)
    if (mask_(a.features, e.features)) out.push_back(e);
  return out;
}

}  // namespace mackrl

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

#include "mackrl/ck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mackrl {

const EntityState* WorldState::find(EntityId id) const {
  for (const auto& e : entities)
    if (e.id == id) return &e;
  return nullptr;
}

const EntityState& WorldState::at(EntityId id) const {
  const EntityState* e = find(id);
  if (!e) throw std::invalid_argument("unknown entity id " + std::to_string(id));
  return *e;
}

std::vector<EntityId> WorldState::agent_ids() const {
  std::vector<EntityId> out;
  for (const auto& e : entities)
    if (e.is_agent) out.push_back(e.id);
  std::sort(out.begin(), out.end());
  return out;
}

VisibilityMask VisibilityMask::circular(double radius, int x_index, int y_index) {
  return VisibilityMask([=](std::span<const double> obs, std::span<const double> tgt) {
    const double dx = obs[x_index] - tgt[x_index];
    const double dy = obs[y_index] - tgt[y_index];
    return dx * dx + dy * dy <= radius * radius;
  });
}

VisibilityMask VisibilityMask::tabular(std::vector<std::vector<bool>> table, int id_index) {
  for (std::size_t i = 0; i < table.size(); ++i) table[i][i] = true;
  return VisibilityMask([table = std::move(table), id_index](
                            std::span<const double> obs, std::span<const double> tgt) {
    const auto i = static_cast<std::size_t>(obs[id_index]);
    const auto j = static_cast<std::size_t>(tgt[id_index]);
    return table[i][j];
  });
}

namespace {

EntityIdSet sorted_intersection(const EntityIdSet& a, const EntityIdSet& b) {
  EntityIdSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

const EntityState& agent_entity(const WorldState& state, EntityId agent) {
  const EntityState& e = state.at(agent);
  if (!e.is_agent) throw std::invalid_argument("entity " + std::to_string(agent) + " is not an agent");
  return e;
}

}  // namespace

EntityIdSet visible_set(const WorldState& state, EntityId agent, const VisibilityMask& mask) {
  const EntityState& a = agent_entity(state, agent);
  EntityIdSet out;
  for (const auto& e : state.entities)
    if (mask(a.features, e.features)) out.push_back(e.id);
  std::sort(out.begin(), out.end());
  return out;
}

EntityIdSet mutual_knowledge(const WorldState& state, const EntityIdSet& group,
                             const VisibilityMask& mask) {
  if (group.empty()) throw std::invalid_argument("mutual_knowledge: empty group");
  EntityIdSet acc = visible_set(state, group.front(), mask);
  for (std::size_t i = 1; i < group.size(); ++i)
    acc = sorted_intersection(acc, visible_set(state, group[i], mask));
  return acc;
}

CommonKnowledgeSet common_knowledge(const WorldState& state, const EntityIdSet& group,
                                    const VisibilityMask& mask) {
  if (group.empty()) throw std::invalid_argument("common_knowledge: empty group");
  CommonKnowledgeSet ck;
  ck.group = group;
  std::sort(ck.group.begin(), ck.group.end());

  bool all_pairs_visible = true;
  for (EntityId a : group) {
    const EntityState& sa = agent_entity(state, a);
    for (EntityId b : group) {
      if (!mask(sa.features, state.at(b).features)) {
        all_pairs_visible = false;
        break;
      }
    }
    if (!all_pairs_visible) break;
  }
  if (all_pairs_visible) {
    ck.entities = mutual_knowledge(state, group, mask);
    for (EntityId id : ck.entities) ck.observation.push_back(state.at(id));
  }
  return ck;
}

EntityIdSet common_knowledge_recursive(const WorldState& state, const EntityIdSet& group,
                                       const VisibilityMask& mask, EntityId start_agent,
                                       int iterations) {
  if (std::find(group.begin(), group.end(), start_agent) == group.end())
    throw std::invalid_argument("common_knowledge_recursive: start agent not in group");
  if (iterations < 0) throw std::invalid_argument("common_knowledge_recursive: iterations < 0");

  // I_0 per member.
  std::vector<EntityIdSet> sets;
  sets.reserve(group.size());
  for (EntityId a : group) sets.push_back(visible_set(state, a, mask));

  // Pairwise visibility between members, fixed by the state.
  const std::size_t n = group.size();
  std::vector<std::vector<bool>> sees(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const EntityState& sa = agent_entity(state, group[i]);
    for (std::size_t j = 0; j < n; ++j)
      sees[i][j] = mask(sa.features, state.at(group[j]).features);
  }

  for (int m = 0; m < iterations; ++m) {
    std::vector<EntityIdSet> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      // intersection over members b of (I^b_{m-1} if i sees b else {})
      EntityIdSet acc;
      bool first = true;
      for (std::size_t j = 0; j < n; ++j) {
        EntityIdSet part = sees[i][j] ? sets[j] : EntityIdSet{};
        if (first) {
          acc = std::move(part);
          first = false;
        } else {
          acc = sorted_intersection(acc, part);
        }
        if (acc.empty()) break;
      }
      next[i] = std::move(acc);
    }
    sets = std::move(next);
  }

  const auto idx = static_cast<std::size_t>(
      std::find(group.begin(), group.end(), start_agent) - group.begin());
  return sets[idx];
}

BeliefSet belief_common_knowledge(const WorldState& perceived, EntityId owner,
                                  const EntityIdSet& group, const VisibilityMask& mask) {
  BeliefSet belief;
  belief.owner = owner;
  belief.group = group;
  std::sort(belief.group.begin(), belief.group.end());
  for (EntityId a : group) {
    const EntityState* e = perceived.find(a);
    if (!e || !e->is_agent) return belief;  // member not perceived -> no believed CK
  }
  belief.entities = common_knowledge(perceived, belief.group, mask).entities;
  return belief;
}

void EntityEncoding::encode(const std::vector<EntityState>& entities,
                            std::span<double> out) const {
  if (static_cast<int>(out.size()) != size())
    throw std::invalid_argument("EntityEncoding: output span size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = entities.empty() ? 0.0 : 1.0;
  for (const auto& e : entities) {
    if (e.id < 0 || e.id >= max_entities)
      throw std::invalid_argument("EntityEncoding: entity id out of slot range");
    const int base = 1 + e.id * (1 + feature_dim);
    out[base] = 1.0;
    const int nf = std::min<int>(feature_dim, static_cast<int>(e.features.size()));
    for (int f = 0; f < nf; ++f) out[base + 1 + f] = e.features[f] * feature_scale;
  }
}

}  // namespace mackrl

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

// Common-knowledge engine for entity-based worlds.
//
// A world state is a set of entity feature records. Agents observe entities
// through a commonly known binary visibility mask over feature vectors.
// Mutual knowledge of a group is the intersection of the members' visible
// sets; common knowledge is that intersection when all members can see each
// other, and empty otherwise. Both the closed form and the iterated
// recursion it summarises are provided, plus per-agent beliefs computed from
// an agent's own (possibly corrupted) observation.

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace mackrl {

using EntityId = int;
using EntityIdSet = std::vector<EntityId>;  // sorted, unique

struct EntityState {
  EntityId id = 0;
  std::vector<double> features;
  bool is_agent = false;
};

struct WorldState {
  std::vector<EntityState> entities;

  const EntityState* find(EntityId id) const;
  // Throws std::invalid_argument on unknown id.
  const EntityState& at(EntityId id) const;
  std::vector<EntityId> agent_ids() const;
};

// Pure predicate over (observer features, target features). Self-visibility
// mu(s,s) must hold for every agent; the built-in constructors guarantee it.
class VisibilityMask {
 public:
  using Fn = std::function<bool(std::span<const double>, std::span<const double>)>;

  explicit VisibilityMask(Fn fn) : fn_(std::move(fn)) {}

  // Euclidean distance between (features[x], features[y]) pairs <= radius.
  static VisibilityMask circular(double radius, int x_index = 0, int y_index = 1);

  // Explicit boolean matrix indexed by an id carried in the feature vectors;
  // the diagonal is forced true. Used by tests and tabular configurations.
  static VisibilityMask tabular(std::vector<std::vector<bool>> table, int id_index = 0);

  bool operator()(std::span<const double> observer, std::span<const double> target) const {
    return fn_(observer, target);
  }

 private:
  Fn fn_;
};

struct CommonKnowledgeSet {
  EntityIdSet group;
  EntityIdSet entities;                 // I^G
  std::vector<EntityState> observation; // z^G, id order

  bool empty() const { return entities.empty(); }
};

struct BeliefSet {
  EntityId owner = 0;
  EntityIdSet group;
  EntityIdSet entities;  // what `owner` believes is commonly known
};

// M^a = { e | mu(s^a, s^e) }. Throws on unknown/non-agent id.
EntityIdSet visible_set(const WorldState& state, EntityId agent,
                        const VisibilityMask& mask);

// M^G = intersection of members' visible sets. Throws on empty group.
EntityIdSet mutual_knowledge(const WorldState& state, const EntityIdSet& group,
                             const VisibilityMask& mask);

// Closed form: M^G if every ordered pair of members sees each other, else {}.
CommonKnowledgeSet common_knowledge(const WorldState& state, const EntityIdSet& group,
                                    const VisibilityMask& mask);

// Iterated definition: I_0 = M^start, I_m = per-member filtered intersection.
// Returns the start agent's set after exactly `iterations` applications;
// stationary from iteration |group|+3 on.
EntityIdSet common_knowledge_recursive(const WorldState& state, const EntityIdSet& group,
                                       const VisibilityMask& mask, EntityId start_agent,
                                       int iterations);

// Belief of `owner` about the group's common knowledge, computed by applying
// the closed form to the owner's perceived world as if it were ground truth.
// Group members absent from the perception yield an empty belief.
BeliefSet belief_common_knowledge(const WorldState& perceived, EntityId owner,
                                  const EntityIdSet& group, const VisibilityMask& mask);

// Fixed-length input encoding shared by policy heads: a presence flag per
// entity slot followed by the (scaled) entity features, preceded by one
// "knowledge present" flag. Empty knowledge encodes as all zeros + flag 0.
struct EntityEncoding {
  int max_entities = 0;
  int feature_dim = 0;
  double feature_scale = 1.0;

  int size() const { return 1 + max_entities * (1 + feature_dim); }
  // Entities must have ids in [0, max_entities).
  void encode(const std::vector<EntityState>& entities, std::span<double> out) const;
};

}  // namespace mackrl

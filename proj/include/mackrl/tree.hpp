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

// Pairwise hierarchical policy tree: a pair selector over agent partitions,
// one pair controller per unordered pair (joint actions plus a delegation
// action), and one individual controller per agent. Provides decentralised
// per-agent action selection from shared per-(timestep, node) random
// streams, the recursive marginal probability of a joint environmental
// action, and the exact gradient of its log w.r.t. all head parameters.

#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mackrl/heads.hpp"
#include "mackrl/rng.hpp"

namespace mackrl {

struct Partition {
  // Canonical form: every group ascending, groups ordered by first element.
  std::vector<std::vector<int>> groups;

  static Partition canonical(std::vector<std::vector<int>> groups);
  bool operator==(const Partition&) const = default;
};

// Number of pairwise partitions (one singleton when n is odd):
// n! / (2^floor(n/2) * floor(n/2)!).
unsigned long long pair_partition_count(int n);

// All pairwise partitions of {0..n-1} in canonical lexicographic order.
// Throws for n < 2.
std::vector<Partition> enumerate_pair_partitions(int n);

// Uniform sample of k partitions without replacement, deterministic in seed,
// returned in canonical order. Throws unless 1 <= k <= |all|.
std::vector<Partition> subsample_partitions(const std::vector<Partition>& all, int k,
                                            std::uint64_t seed);

// Joint environmental action of a group, aligned with the node's sorted
// group order.
struct JointAction {
  std::vector<int> actions;
  bool operator==(const JointAction&) const = default;
};

using GroupAction = std::variant<JointAction, Partition>;

struct PolicyNode {
  int id = -1;
  std::vector<int> group;                        // sorted agent ids
  std::vector<GroupAction> actions;              // env actions first, then partitions
  int num_env_actions = 0;
  std::vector<std::vector<int>> child_nodes;     // per action: subgroup node ids
  int head = -1;                                 // index into PolicyTree heads
  int level = 0;                                 // 0 selector, 1 pair, 2 individual
  int index_onehot = 0;                          // node position within its level
  int level_size = 1;                            // width of the appended one-hot
  int base_input_dim = 0;

  int input_dim() const { return base_input_dim + level_size; }
  bool is_leaf() const { return group.size() == 1; }
};

// Supplies the observation-side input of each node (common knowledge or
// belief encoding for group nodes, the agent's own observation for leaves).
class NodeInputProvider {
 public:
  virtual ~NodeInputProvider() = default;
  virtual void node_input(const PolicyNode& node, std::span<double> out) const = 0;
};

// Provider over precomputed per-node vectors (training batches, tests).
class StoredInputs final : public NodeInputProvider {
 public:
  StoredInputs() = default;
  explicit StoredInputs(std::vector<std::vector<double>> by_node)
      : by_node_(std::move(by_node)) {}
  std::vector<std::vector<double>>& by_node() { return by_node_; }
  const std::vector<std::vector<double>>& by_node() const { return by_node_; }
  void node_input(const PolicyNode& node, std::span<double> out) const override;

 private:
  std::vector<std::vector<double>> by_node_;
};

struct SelectionStep {
  int node_id = -1;
  int action_index = -1;
};

struct TreeArch {
  HeadKind kind = HeadKind::kLinear;
  int hidden_dim = 16;
};

struct PairwiseTreeConfig {
  int num_agents = 2;
  std::vector<int> actions_per_agent;  // size num_agents
  int selector_input_dim = 1;
  int pair_input_dim = 1;
  int individual_input_dim = 1;
  TreeArch arch;
  int partition_subsample = 0;  // 0 -> keep all partitions
  std::uint64_t subsample_seed = 0;
  // Central-V special case: the selector has a single all-singletons
  // partition and there are no pair controllers.
  bool singleton_root = false;
};

class PolicyTree {
 public:
  PolicyTree() = default;  // empty; assign from make_pairwise
  static PolicyTree make_pairwise(const PairwiseTreeConfig& config);

  int num_agents() const { return num_agents_; }
  int num_actions(int agent) const { return actions_per_agent_[agent]; }
  const std::vector<PolicyNode>& nodes() const { return nodes_; }
  const PolicyNode& root() const { return nodes_.front(); }
  // Controller node of a group, shallowest level first (for two agents the
  // full group names the selector, not the pair controller). -1 if absent.
  int node_for_group(std::span<const int> group) const;
  // -1 when the tree has no pair controllers (singleton root).
  int pair_node_id(int a, int b) const;
  int leaf_node_id(int agent) const;

  std::vector<Head>& heads() { return heads_; }
  const std::vector<Head>& heads() const { return heads_; }

  int param_count() const;
  int head_param_offset(int head_index) const;
  std::vector<double> get_params() const;
  void set_params(std::span<const double> flat);
  // Weights ~ N(0, scale); the index one-hot columns are then rescaled by
  // index_scale / scale (per-agent symmetry breaking).
  void init_params(RngStream& rng, double scale, double index_scale);

  // Bounded-softmax action distribution of a node.
  std::vector<double> node_distribution(const PolicyNode& node,
                                        const NodeInputProvider& inputs,
                                        double eps) const;

  // Decentralised selection for one agent: walks from the root, sampling
  // each visited node from its shared (seed, t, node) stream; in greedy mode
  // every sample is replaced by the argmax (lowest index on ties). Returns
  // the agent's environmental action.
  int select_action(int agent, const NodeInputProvider& view, const SharedSeed& seed,
                    std::uint64_t t, double eps, bool greedy,
                    std::vector<SelectionStep>* trace = nullptr) const;

  // Marginal probability that the hierarchy emits `joint_env_action`
  // (indexed by agent id) for the subtree rooted at `node_id`.
  double joint_probability(int node_id, std::span<const int> joint_env_action,
                           const NodeInputProvider& inputs, double eps) const;
  double joint_probability(std::span<const int> joint_env_action,
                           const NodeInputProvider& inputs, double eps) const;

  // d log joint_probability / d theta, accumulated into `grad`
  // (size param_count(), tree parameter layout). Returns the probability;
  // throws std::domain_error when it is zero.
  double log_joint_grad(std::span<const int> joint_env_action,
                        const NodeInputProvider& inputs, double eps,
                        std::span<double> grad) const;

 private:
  void assemble_input(const PolicyNode& node, const NodeInputProvider& inputs,
                      std::span<double> out) const;
  int env_action_match(const PolicyNode& node,
                       std::span<const int> joint_env_action) const;

  struct NodeEval;
  double eval_subtree(int node_id, std::span<const int> joint_env_action,
                      const NodeInputProvider& inputs, double eps,
                      std::vector<NodeEval>& evals, bool keep_details) const;

  int num_agents_ = 0;
  std::vector<int> actions_per_agent_;
  std::vector<PolicyNode> nodes_;
  std::vector<Head> heads_;
  std::vector<int> head_offsets_;
};

}  // namespace mackrl

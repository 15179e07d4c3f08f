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

#include <map>
#include <set>
#include <stdexcept>

#include "mackrl/tree.hpp"

using namespace mackrl;

namespace {

PairwiseTreeConfig small_config(int n, int actions, int dim = 2) {
  PairwiseTreeConfig tc;
  tc.num_agents = n;
  tc.actions_per_agent.assign(n, actions);
  tc.selector_input_dim = dim;
  tc.pair_input_dim = dim;
  tc.individual_input_dim = dim;
  return tc;
}

StoredInputs zero_inputs(const PolicyTree& tree) {
  std::vector<std::vector<double>> by_node(tree.nodes().size());
  for (const auto& node : tree.nodes())
    by_node[node.id].assign(node.base_input_dim, 0.0);
  return StoredInputs(std::move(by_node));
}

}  // namespace

TEST_CASE("pairwise partition enumeration") {
  CHECK(enumerate_pair_partitions(2) ==
        std::vector<Partition>{Partition::canonical({{0, 1}})});

  const auto three = enumerate_pair_partitions(3);
  REQUIRE(three.size() == 3);
  std::set<std::vector<std::vector<int>>> got;
  for (const auto& p : three) got.insert(p.groups);
  CHECK(got.count({{0}, {1, 2}}) == 1);
  CHECK(got.count({{0, 2}, {1}}) == 1);
  CHECK(got.count({{0, 1}, {2}}) == 1);

  for (int n = 2; n <= 8; ++n)
    CHECK(enumerate_pair_partitions(n).size() == pair_partition_count(n));
  CHECK(pair_partition_count(11) == 10395ULL);
  CHECK_THROWS_AS(enumerate_pair_partitions(1), std::invalid_argument);
}

TEST_CASE("partition subsampling is a deterministic uniform subset") {
  const auto all = enumerate_pair_partitions(6);
  const auto a = subsample_partitions(all, 4, 123);
  const auto b = subsample_partitions(all, 4, 123);
  CHECK(a == b);
  CHECK(a.size() == 4);
  std::set<std::vector<std::vector<int>>> pool;
  for (const auto& p : all) pool.insert(p.groups);
  for (const auto& p : a) CHECK(pool.count(p.groups) == 1);

  CHECK(subsample_partitions(all, static_cast<int>(all.size()), 9) == all);
  CHECK_THROWS_AS(subsample_partitions(all, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(subsample_partitions(all, static_cast<int>(all.size()) + 1, 1),
                  std::invalid_argument);
}

TEST_CASE("tree structure: selector has partitions, leaves have env actions") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(4, 3));
  CHECK(tree.nodes().size() == 1 + 6 + 4);
  const PolicyNode& root = tree.root();
  CHECK(root.num_env_actions == 0);
  CHECK(root.actions.size() == pair_partition_count(4));
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) {
      CHECK(node.num_env_actions == static_cast<int>(node.actions.size()));
    }
    if (node.level == 1) {
      CHECK(node.num_env_actions == 9);
      CHECK(node.actions.size() == 10);  // joint actions + delegation
    }
  }
  // pair controllers share one head, individual controllers share one head
  std::set<int> pair_heads, leaf_heads;
  for (const auto& node : tree.nodes()) {
    if (node.level == 1) pair_heads.insert(node.head);
    if (node.level == 2) leaf_heads.insert(node.head);
  }
  CHECK(pair_heads.size() == 1);
  CHECK(leaf_heads.size() == 1);
}

TEST_CASE("uniform heads induce the uniform joint distribution") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(3, 5));
  StoredInputs inputs = zero_inputs(tree);  // zero params -> uniform everywhere
  std::vector<int> joint = {0, 0, 0};
  for (joint[0] = 0; joint[0] < 5; ++joint[0])
    for (joint[1] = 0; joint[1] < 5; ++joint[1])
      for (joint[2] = 0; joint[2] < 5; ++joint[2])
        CHECK(tree.joint_probability(joint, inputs, 0.0) ==
              doctest::Approx(1.0 / 125).epsilon(1e-12));
}

TEST_CASE("a deterministic pair controller concentrates the joint distribution") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(2, 3));
  // (u1, u2) = (1, 2): env action index 1*3+2 = 5; bias lives after weights
  const PolicyNode& pair = tree.nodes()[tree.pair_node_id(0, 1)];
  Head& head = tree.heads()[pair.head];
  const int out = head.spec().output_dim;
  const int in = head.spec().input_dim;
  head.params()[static_cast<std::size_t>(out) * in + 5] = 1e4;
  StoredInputs inputs = zero_inputs(tree);
  std::vector<int> joint = {1, 2};
  CHECK(tree.joint_probability(joint, inputs, 0.0) == doctest::Approx(1.0));
  joint = {0, 0};
  CHECK(tree.joint_probability(joint, inputs, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("shared seeds keep decentralised selection coherent") {
  PairwiseTreeConfig tc = small_config(3, 4);
  PolicyTree tree = PolicyTree::make_pairwise(tc);
  RngStream init = RngStream::from({5});
  tree.init_params(init, 0.8, 0.8);
  StoredInputs inputs = zero_inputs(tree);

  for (std::uint64_t trial = 0; trial < 10000; ++trial) {
    const SharedSeed seed{99, trial};
    std::vector<std::vector<SelectionStep>> traces(3);
    std::vector<int> joint(3);
    for (int a = 0; a < 3; ++a)
      joint[a] = tree.select_action(a, inputs, seed, 0, 0.1, false, &traces[a]);
    // all agents sample the same partition at the root
    CHECK(traces[0][0].action_index == traces[1][0].action_index);
    CHECK(traces[0][0].action_index == traces[2][0].action_index);
    // agents that meet at a shared node sample the same action there
    std::map<int, int> seen;  // node id -> action index
    for (int a = 0; a < 3; ++a)
      for (const auto& step : traces[a]) {
        auto [it, inserted] = seen.emplace(step.node_id, step.action_index);
        if (!inserted) CHECK(it->second == step.action_index);
      }
    // the joint has positive probability under the marginal
    CHECK(tree.joint_probability(joint, inputs, 0.1) > 0.0);
  }
}

TEST_CASE("full exploration makes the joint empirically uniform") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(2, 3));
  RngStream init = RngStream::from({6});
  tree.init_params(init, 1.0, 1.0);  // arbitrary params; eps=1 overrides them
  StoredInputs inputs = zero_inputs(tree);
  std::map<std::pair<int, int>, long> counts;
  const long trials = 30000;
  for (long trial = 0; trial < trials; ++trial) {
    const SharedSeed seed{7, static_cast<std::uint64_t>(trial)};
    const int u0 = tree.select_action(0, inputs, seed, 0, 1.0, false);
    const int u1 = tree.select_action(1, inputs, seed, 0, 1.0, false);
    ++counts[{u0, u1}];
  }
  const double expect = trials / 9.0;
  const double sigma = std::sqrt(trials * (1.0 / 9) * (8.0 / 9));
  for (int u0 = 0; u0 < 3; ++u0)
    for (int u1 = 0; u1 < 3; ++u1)
      CHECK(std::abs(counts[{u0, u1}] - expect) < 4.0 * sigma);
}

TEST_CASE("greedy mode breaks ties toward the lowest action index") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(2, 4));
  StoredInputs inputs = zero_inputs(tree);  // all logits equal
  for (int a = 0; a < 2; ++a)
    CHECK(tree.select_action(a, inputs, {}, 0, 0.0, true) == 0);
}

TEST_CASE("a zero-probability joint action cannot be differentiated") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(2, 2));
  // delegate with certainty, and send the first leaf's action 0 to -inf
  const PolicyNode& pair = tree.nodes()[tree.pair_node_id(0, 1)];
  Head& pair_head = tree.heads()[pair.head];
  int out = pair_head.spec().output_dim;
  int in = pair_head.spec().input_dim;
  pair_head.params()[static_cast<std::size_t>(out) * in + out - 1] = 1e4;
  const PolicyNode& leaf = tree.nodes()[tree.leaf_node_id(0)];
  Head& leaf_head = tree.heads()[leaf.head];
  out = leaf_head.spec().output_dim;
  in = leaf_head.spec().input_dim;
  leaf_head.params()[static_cast<std::size_t>(out) * in + 0] = -1e4;

  StoredInputs inputs = zero_inputs(tree);
  std::vector<double> grad(tree.param_count(), 0.0);
  const std::vector<int> joint = {0, 0};
  CHECK(tree.joint_probability(joint, inputs, 0.0) == 0.0);
  CHECK_THROWS_AS(tree.log_joint_grad(joint, inputs, 0.0, grad), std::domain_error);
}

TEST_CASE("joint_probability validates its arguments") {
  PolicyTree tree = PolicyTree::make_pairwise(small_config(2, 2));
  StoredInputs inputs = zero_inputs(tree);
  CHECK_THROWS_AS(tree.joint_probability(std::vector<int>{2, 0}, inputs, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tree.joint_probability(std::vector<int>{0}, inputs, 0.0),
                  std::invalid_argument);
}

TEST_CASE("central-v trees have a single all-singletons partition") {
  PairwiseTreeConfig tc = small_config(3, 2);
  tc.singleton_root = true;
  PolicyTree tree = PolicyTree::make_pairwise(tc);
  CHECK(tree.nodes().size() == 4);  // root + 3 leaves
  CHECK(tree.root().actions.size() == 1);
  StoredInputs inputs = zero_inputs(tree);
  // joint = product of uniform individuals
  CHECK(tree.joint_probability(std::vector<int>{1, 0, 1}, inputs, 0.0) ==
        doctest::Approx(1.0 / 8).epsilon(1e-12));
}

TEST_CASE("partition subsampling restricts the selector's action space") {
  PairwiseTreeConfig tc = small_config(4, 2);
  tc.partition_subsample = 2;
  tc.subsample_seed = 11;
  PolicyTree tree = PolicyTree::make_pairwise(tc);
  CHECK(tree.root().actions.size() == 2);
  // pair nodes still exist for every unordered pair
  int pair_nodes = 0;
  for (const auto& node : tree.nodes()) pair_nodes += node.level == 1;
  CHECK(pair_nodes == 6);
}

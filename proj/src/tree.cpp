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

#include "mackrl/tree.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "mackrl/sampling.hpp"

namespace mackrl {

namespace {
constexpr std::uint64_t kNodeSamplePurpose = 0x6e6f6465;  // stream tag
}

Partition Partition::canonical(std::vector<std::vector<int>> groups) {
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return Partition{std::move(groups)};
}

unsigned long long pair_partition_count(int n) {
  if (n < 2) throw std::invalid_argument("pair_partition_count: n < 2");
  if (n > 20) throw std::invalid_argument("pair_partition_count: n too large");
  // n! / (2^floor(n/2) * floor(n/2)!)
  unsigned long long num = 1;
  for (int i = 2; i <= n; ++i) num *= static_cast<unsigned long long>(i);
  unsigned long long den = 1;
  for (int i = 1; i <= n / 2; ++i) den *= 2ULL * static_cast<unsigned long long>(i);
  return num / den;
}

namespace {

void enumerate_matchings(std::vector<int>& remaining, std::vector<std::vector<int>>& acc,
                         std::vector<Partition>& out) {
  if (remaining.empty()) {
    out.push_back(Partition::canonical(acc));
    return;
  }
  const int first = remaining.front();
  for (std::size_t j = 1; j < remaining.size(); ++j) {
    const int partner = remaining[j];
    std::vector<int> rest;
    rest.reserve(remaining.size() - 2);
    for (std::size_t k = 1; k < remaining.size(); ++k)
      if (k != j) rest.push_back(remaining[k]);
    acc.push_back({first, partner});
    enumerate_matchings(rest, acc, out);
    acc.pop_back();
  }
}

}  // namespace

std::vector<Partition> enumerate_pair_partitions(int n) {
  if (n < 2) throw std::invalid_argument("enumerate_pair_partitions: n < 2");
  std::vector<Partition> out;
  std::vector<std::vector<int>> acc;
  if (n % 2 == 0) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    enumerate_matchings(all, acc, out);
  } else {
    for (int singleton = 0; singleton < n; ++singleton) {
      std::vector<int> rest;
      for (int i = 0; i < n; ++i)
        if (i != singleton) rest.push_back(i);
      acc.push_back({singleton});
      enumerate_matchings(rest, acc, out);
      acc.pop_back();
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Partition& a, const Partition& b) { return a.groups < b.groups; });
  return out;
}

std::vector<Partition> subsample_partitions(const std::vector<Partition>& all, int k,
                                            std::uint64_t seed) {
  if (k < 1 || k > static_cast<int>(all.size()))
    throw std::invalid_argument("subsample_partitions: k out of range");
  std::vector<int> idx(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) idx[i] = static_cast<int>(i);
  RngStream rng = RngStream::from({seed, 0x73756273});
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.next_below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<Partition> out;
  out.reserve(k);
  for (int i : idx) out.push_back(all[i]);
  return out;
}

void StoredInputs::node_input(const PolicyNode& node, std::span<double> out) const {
  const auto& src = by_node_.at(node.id);
  if (src.size() != out.size())
    throw std::invalid_argument("StoredInputs: input size mismatch for node " +
                                std::to_string(node.id));
  std::copy(src.begin(), src.end(), out.begin());
}

PolicyTree PolicyTree::make_pairwise(const PairwiseTreeConfig& config) {
  const int n = config.num_agents;
  if (n < 1) throw std::invalid_argument("make_pairwise: num_agents < 1");
  if (static_cast<int>(config.actions_per_agent.size()) != n)
    throw std::invalid_argument("make_pairwise: actions_per_agent size mismatch");
  if (!config.singleton_root && n < 2)
    throw std::invalid_argument("make_pairwise: pairwise hierarchy needs >= 2 agents");

  PolicyTree tree;
  tree.num_agents_ = n;
  tree.actions_per_agent_ = config.actions_per_agent;

  // Node ids: 0 root, then pair nodes in canonical pair order, then leaves.
  std::vector<std::pair<int, int>> pairs;
  if (!config.singleton_root)
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  const int pair_base = 1;
  const int leaf_base = pair_base + static_cast<int>(pairs.size());
  auto pair_node_id = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    // index of (a,b) in row-major upper triangle
    int idx = 0;
    for (int i = 0; i < a; ++i) idx += n - 1 - i;
    idx += b - a - 1;
    return pair_base + idx;
  };
  auto leaf_node_id = [&](int a) { return leaf_base + a; };
  auto subgroup_node_id = [&](const std::vector<int>& g) {
    return g.size() == 1 ? leaf_node_id(g[0]) : pair_node_id(g[0], g[1]);
  };

  // Root / pair selector.
  PolicyNode root;
  root.id = 0;
  for (int a = 0; a < n; ++a) root.group.push_back(a);
  root.level = 0;
  root.index_onehot = 0;
  root.level_size = 1;
  root.base_input_dim = config.selector_input_dim;
  root.num_env_actions = 0;
  if (config.singleton_root) {
    std::vector<std::vector<int>> singles;
    for (int a = 0; a < n; ++a) singles.push_back({a});
    root.actions.push_back(Partition::canonical(singles));
  } else {
    std::vector<Partition> parts = enumerate_pair_partitions(n);
    if (config.partition_subsample > 0 &&
        config.partition_subsample < static_cast<int>(parts.size()))
      parts = subsample_partitions(parts, config.partition_subsample,
                                   config.subsample_seed);
    for (auto& p : parts) root.actions.push_back(std::move(p));
  }
  for (const auto& action : root.actions) {
    const auto& part = std::get<Partition>(action);
    std::vector<int> children;
    for (const auto& g : part.groups) children.push_back(subgroup_node_id(g));
    root.child_nodes.push_back(std::move(children));
  }
  tree.nodes_.push_back(std::move(root));

  // Pair controllers.
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs[i];
    PolicyNode node;
    node.id = pair_base + static_cast<int>(i);
    node.group = {a, b};
    node.level = 1;
    node.index_onehot = static_cast<int>(i);
    node.level_size = static_cast<int>(pairs.size());
    node.base_input_dim = config.pair_input_dim;
    const int na = config.actions_per_agent[a];
    const int nb = config.actions_per_agent[b];
    node.num_env_actions = na * nb;
    for (int ua = 0; ua < na; ++ua)
      for (int ub = 0; ub < nb; ++ub) {
        node.actions.push_back(JointAction{{ua, ub}});
        node.child_nodes.emplace_back();
      }
    node.actions.push_back(Partition::canonical({{a}, {b}}));  // delegation
    node.child_nodes.push_back({leaf_node_id(a), leaf_node_id(b)});
    tree.nodes_.push_back(std::move(node));
  }

  // Individual controllers.
  for (int a = 0; a < n; ++a) {
    PolicyNode node;
    node.id = leaf_node_id(a);
    node.group = {a};
    node.level = 2;
    node.index_onehot = a;
    node.level_size = n;
    node.base_input_dim = config.individual_input_dim;
    node.num_env_actions = config.actions_per_agent[a];
    for (int u = 0; u < node.num_env_actions; ++u) {
      node.actions.push_back(JointAction{{u}});
      node.child_nodes.emplace_back();
    }
    tree.nodes_.push_back(std::move(node));
  }

  // Heads: selector owns one; pair controllers share per action-space
  // signature; individual controllers share per action count.
  std::map<std::pair<int, int>, int> shared;  // (level, action count) -> head
  for (auto& node : tree.nodes_) {
    HeadSpec spec;
    spec.kind = config.arch.kind;
    spec.hidden_dim = config.arch.kind == HeadKind::kLinear ? 0 : config.arch.hidden_dim;
    spec.input_dim = node.input_dim();
    spec.output_dim = static_cast<int>(node.actions.size());
    if (node.level == 0) {
      node.head = static_cast<int>(tree.heads_.size());
      tree.heads_.emplace_back(spec);
    } else {
      const auto key = std::make_pair(node.level, spec.output_dim);
      auto it = shared.find(key);
      if (it == shared.end()) {
        node.head = static_cast<int>(tree.heads_.size());
        shared.emplace(key, node.head);
        tree.heads_.emplace_back(spec);
      } else {
        node.head = it->second;
      }
    }
  }
  tree.head_offsets_.resize(tree.heads_.size() + 1, 0);
  for (std::size_t i = 0; i < tree.heads_.size(); ++i)
    tree.head_offsets_[i + 1] = tree.head_offsets_[i] + tree.heads_[i].param_count();
  return tree;
}

int PolicyTree::node_for_group(std::span<const int> group) const {
  std::vector<int> g(group.begin(), group.end());
  std::sort(g.begin(), g.end());
  for (const auto& node : nodes_)
    if (node.group == g) return node.id;
  return -1;
}

int PolicyTree::pair_node_id(int a, int b) const {
  std::vector<int> g = {std::min(a, b), std::max(a, b)};
  for (const auto& node : nodes_)
    if (node.level == 1 && node.group == g) return node.id;
  return -1;
}

int PolicyTree::leaf_node_id(int agent) const {
  for (const auto& node : nodes_)
    if (node.level == 2 && node.group.size() == 1 && node.group[0] == agent)
      return node.id;
  return -1;
}

int PolicyTree::param_count() const { return head_offsets_.back(); }

int PolicyTree::head_param_offset(int head_index) const {
  return head_offsets_[head_index];
}

std::vector<double> PolicyTree::get_params() const {
  std::vector<double> flat(param_count());
  for (std::size_t i = 0; i < heads_.size(); ++i)
    std::copy(heads_[i].params().begin(), heads_[i].params().end(),
              flat.begin() + head_offsets_[i]);
  return flat;
}

void PolicyTree::set_params(std::span<const double> flat) {
  if (static_cast<int>(flat.size()) != param_count())
    throw std::invalid_argument("set_params: size mismatch");
  for (std::size_t i = 0; i < heads_.size(); ++i)
    std::copy(flat.begin() + head_offsets_[i], flat.begin() + head_offsets_[i + 1],
              heads_[i].params().begin());
}

void PolicyTree::init_params(RngStream& rng, double scale, double index_scale) {
  for (auto& head : heads_) head.init_params(rng, scale);
  if (index_scale == scale || scale == 0.0) return;
  // The index one-hot occupies the tail of the input; all nodes sharing a
  // head have the same base dim, so rescale each head exactly once.
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    for (const auto& node : nodes_) {
      if (node.head == static_cast<int>(h)) {
        heads_[h].rescale_input_columns(node.base_input_dim, node.input_dim(),
                                        index_scale / scale);
        break;
      }
    }
  }
}

std::vector<double> PolicyTree::node_distribution(const PolicyNode& node,
                                                  const NodeInputProvider& inputs,
                                                  double eps) const {
  std::vector<double> in(node.input_dim());
  assemble_input(node, inputs, in);
  const std::vector<double> logits = heads_[node.head].forward_logits(in);
  return bounded_softmax(logits, eps);
}

void PolicyTree::assemble_input(const PolicyNode& node, const NodeInputProvider& inputs,
                                std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  inputs.node_input(node, out.subspan(0, node.base_input_dim));
  out[node.base_input_dim + node.index_onehot] = 1.0;
}

int PolicyTree::select_action(int agent, const NodeInputProvider& view,
                              const SharedSeed& seed, std::uint64_t t, double eps,
                              bool greedy, std::vector<SelectionStep>* trace) const {
  const PolicyNode* node = &root();
  for (;;) {
    const std::vector<double> dist = node_distribution(*node, view, eps);
    int idx;
    if (greedy) {
      idx = argmax_lowest(dist);
    } else {
      RngStream stream = seed.stream(t, static_cast<std::uint64_t>(node->id),
                                     kNodeSamplePurpose);
      idx = heuristic_sample(dist, stream.next_double());
    }
    if (trace) trace->push_back({node->id, idx});
    if (idx < node->num_env_actions) {
      const auto& joint = std::get<JointAction>(node->actions[idx]);
      for (std::size_t i = 0; i < node->group.size(); ++i)
        if (node->group[i] == agent) return joint.actions[i];
      throw std::logic_error("select_action: agent not in node group");
    }
    const auto& part = std::get<Partition>(node->actions[idx]);
    int next_id = -1;
    for (std::size_t gi = 0; gi < part.groups.size(); ++gi) {
      const auto& g = part.groups[gi];
      if (std::find(g.begin(), g.end(), agent) != g.end()) {
        next_id = node->child_nodes[idx][gi];
        break;
      }
    }
    if (next_id < 0)
      throw std::runtime_error("select_action: malformed tree, no subgroup for agent " +
                               std::to_string(agent));
    node = &nodes_[next_id];
  }
}

int PolicyTree::env_action_match(const PolicyNode& node,
                                 std::span<const int> joint_env_action) const {
  if (node.num_env_actions == 0) return -1;
  if (node.group.size() == 1) return joint_env_action[node.group[0]];
  // Pair node: env actions enumerated with the first agent's action major.
  const int ua = joint_env_action[node.group[0]];
  const int ub = joint_env_action[node.group[1]];
  return ua * actions_per_agent_[node.group[1]] + ub;
}

struct PolicyTree::NodeEval {
  bool visited = false;
  double prob = 0.0;
  std::vector<double> input;
  std::vector<double> soft;  // softmax (pre-mixture)
  std::vector<double> dist;  // bounded softmax
  double adjoint = 0.0;
};

double PolicyTree::eval_subtree(int node_id, std::span<const int> joint_env_action,
                                const NodeInputProvider& inputs, double eps,
                                std::vector<NodeEval>& evals, bool keep_details) const {
  NodeEval& ev = evals[node_id];
  if (ev.visited) return ev.prob;
  const PolicyNode& node = nodes_[node_id];

  std::vector<double> in(node.input_dim());
  assemble_input(node, inputs, in);
  const std::vector<double> logits = heads_[node.head].forward_logits(in);
  std::vector<double> soft = softmax(logits);
  std::vector<double> dist(soft.size());
  const double u = eps / static_cast<double>(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) dist[i] = (1.0 - eps) * soft[i] + u;

  double p = 0.0;
  const int match = env_action_match(node, joint_env_action);
  if (match >= 0) p += dist[match];
  for (std::size_t i = node.num_env_actions; i < node.actions.size(); ++i) {
    double prod = dist[i];
    for (int child : node.child_nodes[i]) {
      prod *= eval_subtree(child, joint_env_action, inputs, eps, evals, keep_details);
      if (prod == 0.0) break;
    }
    p += prod;
  }

  ev.visited = true;
  ev.prob = p;
  if (keep_details) {
    ev.input = std::move(in);
    ev.soft = std::move(soft);
    ev.dist = std::move(dist);
  }
  return p;
}

double PolicyTree::joint_probability(int node_id, std::span<const int> joint_env_action,
                                     const NodeInputProvider& inputs, double eps) const {
  if (node_id < 0 || node_id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("joint_probability: bad node id");
  if (static_cast<int>(joint_env_action.size()) != num_agents_)
    throw std::invalid_argument("joint_probability: action vector must index all agents");
  for (int a : nodes_[node_id].group) {
    const int u = joint_env_action[a];
    if (u < 0 || u >= actions_per_agent_[a])
      throw std::invalid_argument("joint_probability: action out of range for agent " +
                                  std::to_string(a));
  }
  std::vector<NodeEval> evals(nodes_.size());
  return eval_subtree(node_id, joint_env_action, inputs, eps, evals, false);
}

double PolicyTree::joint_probability(std::span<const int> joint_env_action,
                                     const NodeInputProvider& inputs, double eps) const {
  return joint_probability(0, joint_env_action, inputs, eps);
}

double PolicyTree::log_joint_grad(std::span<const int> joint_env_action,
                                  const NodeInputProvider& inputs, double eps,
                                  std::span<double> grad) const {
  if (static_cast<int>(grad.size()) != param_count())
    throw std::invalid_argument("log_joint_grad: grad size mismatch");
  std::vector<NodeEval> evals(nodes_.size());
  const double p = eval_subtree(0, joint_env_action, inputs, eps, evals, true);
  if (!(p > 0.0))
    throw std::domain_error("log_joint_grad: joint action has zero probability");

  // Reverse sweep. Nodes are ordered root, pairs, leaves, i.e. by strictly
  // decreasing group size, which is a topological order of the DAG.
  evals[0].adjoint = 1.0;
  std::vector<double> dist_adjoint, cot;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    NodeEval& ev = evals[id];
    if (!ev.visited || ev.adjoint == 0.0) continue;
    const PolicyNode& node = nodes_[id];
    dist_adjoint.assign(node.actions.size(), 0.0);
    const int match = env_action_match(node, joint_env_action);
    if (match >= 0) dist_adjoint[match] += ev.adjoint;
    for (std::size_t i = node.num_env_actions; i < node.actions.size(); ++i) {
      const auto& children = node.child_nodes[i];
      double prod = 1.0;
      for (int child : children) prod *= evals[child].prob;
      dist_adjoint[i] += ev.adjoint * prod;
      for (std::size_t ci = 0; ci < children.size(); ++ci) {
        double others = ev.dist[i];
        for (std::size_t cj = 0; cj < children.size(); ++cj)
          if (cj != ci) others *= evals[children[cj]].prob;
        evals[children[ci]].adjoint += ev.adjoint * others;
      }
    }
    cot.assign(node.actions.size(), 0.0);
    bounded_softmax_backward(ev.soft, dist_adjoint, eps, cot);
    heads_[node.head].accumulate_grad(
        ev.input, {}, cot,
        grad.subspan(head_offsets_[node.head], heads_[node.head].param_count()));
  }
  // grad currently holds dp/dtheta; convert to dlog(p).
  for (double& g : grad) g /= p;
  return p;
}

}  // namespace mackrl

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

#include "mackrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mackrl/ck.hpp"
#include "mackrl/envs/gridworld.hpp"
#include "mackrl/envs/matrix_game.hpp"
#include "mackrl/heads.hpp"
#include "mackrl/rng.hpp"
#include "mackrl/sampling.hpp"
#include "mackrl/tree.hpp"

namespace mackrl {

namespace {

struct Suite {
  std::vector<CheckResult> results;
  std::ostringstream detail;

  void check(const std::string& name, bool ok, const std::string& info = "") {
    results.push_back({name, ok, info});
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// --- random CK configurations ------------------------------------------------

struct CkConfig {
  WorldState world;
  VisibilityMask mask;
  std::vector<int> agents;
};

CkConfig random_ck_config(RngStream& rng) {
  const int n_agents = 2 + static_cast<int>(rng.next_below(5));   // 2..6
  const int n_other = static_cast<int>(rng.next_below(7));        // 0..6
  CkConfig cfg{WorldState{}, VisibilityMask::circular(1.0 + 5.0 * rng.next_double()),
               {}};
  for (int i = 0; i < n_agents + n_other; ++i) {
    EntityState e;
    e.id = i;
    e.is_agent = i < n_agents;
    e.features = {10.0 * rng.next_double(), 10.0 * rng.next_double()};
    cfg.world.entities.push_back(std::move(e));
    if (i < n_agents) cfg.agents.push_back(i);
  }
  return cfg;
}

EntityIdSet random_group(const std::vector<int>& agents, RngStream& rng, int min_size = 1) {
  const int size = min_size + static_cast<int>(rng.next_below(agents.size() - min_size + 1));
  std::vector<int> pool = agents;
  for (int i = 0; i < size; ++i)
    std::swap(pool[i], pool[i + rng.next_below(pool.size() - i)]);
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

bool is_subset(const EntityIdSet& small, const EntityIdSet& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// --- random trees ----------------------------------------------------------------

PolicyTree random_tree(RngStream& rng, int n_agents, int n_actions, int base_dim,
                       HeadKind kind = HeadKind::kLinear) {
  PairwiseTreeConfig tc;
  tc.num_agents = n_agents;
  tc.actions_per_agent.assign(n_agents, n_actions);
  tc.selector_input_dim = base_dim;
  tc.pair_input_dim = base_dim;
  tc.individual_input_dim = base_dim;
  tc.arch.kind = kind;
  tc.arch.hidden_dim = 4;
  PolicyTree tree = PolicyTree::make_pairwise(tc);
  tree.init_params(rng, 0.7, 0.7);
  return tree;
}

StoredInputs random_inputs(const PolicyTree& tree, RngStream& rng) {
  std::vector<std::vector<double>> by_node(tree.nodes().size());
  for (const auto& node : tree.nodes()) {
    by_node[node.id].resize(node.base_input_dim);
    for (double& v : by_node[node.id]) v = rng.next_normal();
  }
  return StoredInputs(std::move(by_node));
}

// Enumerate all joint actions of the tree's agents.
std::vector<std::vector<int>> all_joint_actions(const PolicyTree& tree) {
  std::vector<std::vector<int>> out;
  std::vector<int> joint(tree.num_agents(), 0);
  for (;;) {
    out.push_back(joint);
    int k = tree.num_agents() - 1;
    while (k >= 0 && ++joint[k] == tree.num_actions(k)) joint[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double chi_square_critical(int dof, double alpha) {
  // Wilson-Hilferty cube approximation with the normal upper quantile.
  const double z = alpha <= 0.01 ? 2.3263479 : (alpha <= 0.05 ? 1.6448536 : 1.2815516);
  const double k = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

// ---------------------------------------------------------------------------

std::vector<CheckResult> verify_ck(int configs) {
  Suite s;
  RngStream rng = RngStream::from({0xce, 1});
  bool equivalence = true, monotone = true, agent_independent = true, contained = true;
  std::string first_failure;
  for (int c = 0; c < configs; ++c) {
    CkConfig cfg = random_ck_config(rng);
    const EntityIdSet group = random_group(cfg.agents, rng);
    const CommonKnowledgeSet closed = common_knowledge(cfg.world, group, cfg.mask);
    const int iters = static_cast<int>(group.size()) + 3;
    EntityIdSet first;
    for (std::size_t i = 0; i < group.size(); ++i) {
      const EntityIdSet rec =
          common_knowledge_recursive(cfg.world, group, cfg.mask, group[i], iters);
      if (i == 0) first = rec;
      if (rec != closed.entities) equivalence = false;
      if (rec != first) agent_independent = false;
    }
    if (!closed.entities.empty() && !is_subset(closed.group, closed.entities))
      contained = false;
    // nested subgroup
    const EntityIdSet sub = random_group(std::vector<int>(group.begin(), group.end()), rng);
    const CommonKnowledgeSet sub_ck = common_knowledge(cfg.world, sub, cfg.mask);
    if (!is_subset(closed.entities, sub_ck.entities)) monotone = false;
    if (!(equivalence && monotone && agent_independent && contained) &&
        first_failure.empty())
      first_failure = "config " + std::to_string(c);
  }
  s.check("ck.recursive-equals-closed-form[" + std::to_string(configs) + "]", equivalence,
          first_failure);
  s.check("ck.subgroup-monotonicity", monotone, first_failure);
  s.check("ck.start-agent-independence", agent_independent, first_failure);
  s.check("ck.self-containment", contained, first_failure);
  return s.results;
}

std::vector<CheckResult> verify_tree(int marginal_trees) {
  Suite s;
  RngStream rng = RngStream::from({0x7472, 2});

  // Partition combinatorics.
  bool counts_ok = true;
  for (int n = 2; n <= 8; ++n)
    counts_ok &= enumerate_pair_partitions(n).size() == pair_partition_count(n);
  counts_ok &= pair_partition_count(11) == 10395ULL;
  counts_ok &= enumerate_pair_partitions(11).size() == 10395ULL;
  s.check("tree.partition-count-formula[n<=8, n=11]", counts_ok);

  // Subsampling determinism.
  {
    const auto all = enumerate_pair_partitions(8);
    const auto s1 = subsample_partitions(all, 5, 42);
    const auto s2 = subsample_partitions(all, 5, 42);
    bool ok = s1 == s2 && subsample_partitions(all, static_cast<int>(all.size()), 7) == all;
    std::set<std::vector<std::vector<int>>> distinct;
    for (int seed = 0; seed < 100; ++seed)
      distinct.insert(subsample_partitions(all, 5, seed).front().groups);
    s.check("tree.subsample-deterministic", ok);
    s.check("tree.subsample-seed-sensitivity[flagged]", distinct.size() > 1,
            std::to_string(distinct.size()) + " distinct firsts over 100 seeds");
  }

  // Normalisation over random trees.
  {
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < 24; ++i) {
      const int n = 2 + static_cast<int>(rng.next_below(3));
      const int acts = 2 + static_cast<int>(rng.next_below(2));
      PolicyTree tree = random_tree(rng, n, acts, 3);
      StoredInputs inputs = random_inputs(tree, rng);
      for (double eps : {0.0, 0.25}) {
        double sum = 0.0;
        for (const auto& joint : all_joint_actions(tree))
          sum += tree.joint_probability(joint, inputs, eps);
        worst = std::max(worst, std::abs(sum - 1.0));
        if (std::abs(sum - 1.0) > 1e-9) ok = false;
      }
    }
    s.check("tree.marginal-normalisation[1e-9]", ok, "worst |sum-1| = " + fmt(worst));
  }

  // Decentralised sampler matches the marginal within 3-sigma multinomial
  // bounds, and per-agent selections are mutually coherent.
  {
    bool ok = true, coherent = true;
    long cells = 0, beyond_3sigma = 0;
    for (int tree_idx = 0; tree_idx < marginal_trees; ++tree_idx) {
      const int n = 2 + static_cast<int>(rng.next_below(3));
      const int acts = 2 + static_cast<int>(rng.next_below(2));
      // alternate pure and exploration-mixed behaviour (on-policy check)
      const double eps = tree_idx % 2 == 0 ? 0.0 : 0.25;
      PolicyTree tree = random_tree(rng, n, acts, 2);
      StoredInputs inputs = random_inputs(tree, rng);
      const auto joints = all_joint_actions(tree);
      std::map<std::vector<int>, long> counts;
      const long trials = 100000;
      const SharedSeed seed{0xabcdef + static_cast<std::uint64_t>(tree_idx), 0};
      for (long trial = 0; trial < trials; ++trial) {
        std::vector<int> joint(n);
        const SharedSeed ep{seed.run_seed, static_cast<std::uint64_t>(trial)};
        for (int a = 0; a < n; ++a)
          joint[a] = tree.select_action(a, inputs, ep, 0, eps, false);
        ++counts[joint];
      }
      for (const auto& joint : joints) {
        const double p = tree.joint_probability(joint, inputs, eps);
        if (eps > 0.0 && !(p > 0.0)) ok = false;
        const double expect = p * trials;
        const double sigma = std::sqrt(trials * p * (1.0 - p));
        const double observed = static_cast<double>(counts[joint]);
        const double z = sigma > 0.0 ? std::abs(observed - expect) / sigma : 0.0;
        ++cells;
        if (z > 3.0) ++beyond_3sigma;
        if (z > 5.0) ok = false;  // systematic error, not multinomial noise
      }
      long total = 0;
      for (const auto& [joint, c] : counts) total += c;
      if (total != trials) coherent = false;
    }
    // With this many cells a few 3-sigma exceedances are expected under the
    // null (rate 0.27%); allow up to 1% but never past 5 sigma.
    if (beyond_3sigma > std::max(3L, cells / 100)) ok = false;
    s.check("tree.sampler-matches-marginal[3sigma," + std::to_string(marginal_trees) +
                " trees]",
            ok,
            std::to_string(beyond_3sigma) + "/" + std::to_string(cells) +
                " cells beyond 3 sigma");
    s.check("tree.decentralised-coherence", coherent);
  }

  // Explicit three-agent expansion equals the recursive marginal.
  {
    bool ok = true;
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      PolicyTree tree = random_tree(rng, 3, 2 + static_cast<int>(rng.next_below(2)), 2);
      StoredInputs inputs = random_inputs(tree, rng);
      const double eps = 0.0;
      // node distributions
      auto dist = [&](std::span<const int> group) {
        const int id = tree.node_for_group(group);
        return tree.node_distribution(tree.nodes()[id], inputs, eps);
      };
      const std::vector<double> ps = dist(std::array<int, 3>{0, 1, 2});
      const auto& root = tree.root();
      for (const auto& joint : all_joint_actions(tree)) {
        double expanded = 0.0;
        for (std::size_t pi = 0; pi < root.actions.size(); ++pi) {
          const auto& part = std::get<Partition>(root.actions[pi]);
          const auto& single = part.groups[0].size() == 1 ? part.groups[0] : part.groups[1];
          const auto& pair = part.groups[0].size() == 2 ? part.groups[0] : part.groups[1];
          const std::vector<double> pc = dist(pair);
          const std::vector<double> ind_s = dist(std::array<int, 1>{single[0]});
          const std::vector<double> ind_a = dist(std::array<int, 1>{pair[0]});
          const std::vector<double> ind_b = dist(std::array<int, 1>{pair[1]});
          const int na = tree.num_actions(pair[1]);
          const int pair_joint = joint[pair[0]] * na + joint[pair[1]];
          const int delegate = static_cast<int>(pc.size()) - 1;
          expanded += ps[pi] * ind_s[joint[single[0]]] *
                      (pc[pair_joint] +
                       pc[delegate] * ind_a[joint[pair[0]]] * ind_b[joint[pair[1]]]);
        }
        const double recursive = tree.joint_probability(joint, inputs, eps);
        worst = std::max(worst, std::abs(expanded - recursive));
        if (std::abs(expanded - recursive) > 1e-12) ok = false;
      }
    }
    s.check("tree.three-agent-explicit-expansion[1e-12]", ok, "worst = " + fmt(worst));
  }

  // Forcing delegation yields the product of individual policies.
  {
    PolicyTree tree = random_tree(rng, 2, 3, 2);
    // push the whole delegate logit through the bias: underflows the env
    // action probabilities to exactly zero
    for (auto& nodeHead : tree.heads()) (void)nodeHead;
    const PolicyNode& pair_node = tree.nodes()[tree.pair_node_id(0, 1)];
    Head& pair_head = tree.heads()[pair_node.head];
    // bias terms live at the tail of the linear parameter block
    const int out = pair_head.spec().output_dim;
    const int in = pair_head.spec().input_dim;
    pair_head.params()[static_cast<std::size_t>(out) * in + out - 1] = 1e4;
    StoredInputs inputs = random_inputs(tree, rng);
    bool exact = true;
    for (const auto& joint : all_joint_actions(tree)) {
      const double p = tree.joint_probability(joint, inputs, 0.0);
      double prod = 1.0;
      for (int a = 0; a < 2; ++a) {
        const int leaf = tree.node_for_group(std::array<int, 1>{a});
        prod *= tree.node_distribution(tree.nodes()[leaf], inputs, 0.0)[joint[a]];
      }
      if (p != prod) exact = false;
    }
    s.check("tree.forced-delegation-equals-product[exact]", exact);
  }
  return s.results;
}

std::vector<CheckResult> verify_sampling(int holenstein_pairs) {
  Suite s;
  RngStream rng = RngStream::from({0x7361, 3});

  auto random_dist = [&](int n) {
    std::vector<double> p(n);
    double sum = 0.0;
    for (double& v : p) {
      v = 0.05 + rng.next_double();
      sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
  };

  // Inverse-CDF marginal correctness (chi-square, alpha = 0.01).
  {
    bool ok = true;
    for (int rep = 0; rep < 10; ++rep) {
      const int n = 2 + static_cast<int>(rng.next_below(5));
      const std::vector<double> p = random_dist(n);
      std::vector<long> counts(n, 0);
      const long trials = 100000;
      for (long i = 0; i < trials; ++i) ++counts[heuristic_sample(p, rng.next_double())];
      double chi2 = 0.0;
      for (int u = 0; u < n; ++u) {
        const double e = p[u] * trials;
        chi2 += (counts[u] - e) * (counts[u] - e) / e;
      }
      if (chi2 > chi_square_critical(n - 1, 0.01)) ok = false;
    }
    s.check("sampling.heuristic-marginal-chi2", ok);
  }

  // Holenstein marginal: uniform over the acceptance set, i.e. the
  // gamma-quantised distribution; quantisation bias <= |U| * gamma.
  {
    bool ok = true, bias_ok = true;
    for (int rep = 0; rep < 5; ++rep) {
      const int n = 2 + static_cast<int>(rng.next_below(3));
      const std::vector<double> p = random_dist(n);
      HolensteinConfig cfg;
      cfg.grid_steps = 1024;
      std::vector<double> quantised(n, 0.0);
      double total = 0.0;
      for (int u = 0; u < n; ++u) {
        quantised[u] = std::ceil(p[u] * cfg.grid_steps - 1e-12);
        total += quantised[u];
      }
      for (double& q : quantised) q /= total;
      for (int u = 0; u < n; ++u)
        if (std::abs(quantised[u] - p[u]) > n * cfg.gamma()) bias_ok = false;
      std::vector<long> counts(n, 0);
      const long trials = 100000;
      for (long i = 0; i < trials; ++i) {
        cfg.permutation_key = derive_key({0x686f6c, static_cast<std::uint64_t>(rep),
                                          static_cast<std::uint64_t>(i)});
        ++counts[holenstein_sample(p, cfg)];
      }
      double chi2 = 0.0;
      for (int u = 0; u < n; ++u) {
        const double e = quantised[u] * trials;
        chi2 += (counts[u] - e) * (counts[u] - e) / e;
      }
      if (chi2 > chi_square_critical(n - 1, 0.01)) ok = false;
    }
    s.check("sampling.holenstein-marginal-chi2", ok);
    s.check("sampling.holenstein-quantisation-bias", bias_ok);
  }

  // Holenstein disagreement <= 2d/(1+d) + 3 sigma.
  {
    bool ok = true;
    double worst_excess = -1.0;
    for (int pair = 0; pair < holenstein_pairs; ++pair) {
      const int n = 2 + static_cast<int>(rng.next_below(4));
      const std::vector<double> p = random_dist(n);
      std::vector<double> q = random_dist(n);
      // occasionally make q a small perturbation of p for low-TV cases
      if (pair % 3 == 0) {
        q = p;
        double shift = std::min(0.05, q[0] * 0.5);
        q[0] -= shift;
        q[n - 1] += shift;
      }
      const double delta = total_variation(p, q);
      const double bound = 2.0 * delta / (1.0 + delta);
      const long trials = 100000;
      long disagreements = 0;
      HolensteinConfig cfg;
      cfg.grid_steps = 1024;
      for (long i = 0; i < trials; ++i) {
        cfg.permutation_key = derive_key({0x626f756e64, static_cast<std::uint64_t>(pair),
                                          static_cast<std::uint64_t>(i)});
        if (holenstein_sample(p, cfg) != holenstein_sample(q, cfg)) ++disagreements;
      }
      const double rate = static_cast<double>(disagreements) / trials;
      const double sigma =
          std::sqrt(std::max(bound * (1.0 - bound), 1e-12) / trials) + 2.0 * cfg.gamma();
      worst_excess = std::max(worst_excess, rate - bound);
      if (rate > bound + 3.0 * sigma) ok = false;
    }
    s.check("sampling.holenstein-disagreement-bound[" + std::to_string(holenstein_pairs) +
                " pairs]",
            ok, "worst rate-bound = " + fmt(worst_excess));
  }

  // Identical distributions and a shared uniform agree for any group size.
  {
    bool ok = true;
    for (int rep = 0; rep < 200 && ok; ++rep) {
      const int n = 2 + static_cast<int>(rng.next_below(4));
      const std::vector<double> p = random_dist(n);
      const double u = rng.next_double();
      const int agents = 2 + static_cast<int>(rng.next_below(4));
      const int ref = heuristic_sample(p, u);
      for (int a = 1; a < agents; ++a)
        if (heuristic_sample(p, u) != ref) ok = false;
    }
    s.check("sampling.heuristic-group-consistency", ok);
  }

  // Worked disagreement example: (0.6, 0.4) vs (0.5, 0.5).
  {
    const std::vector<double> pa = {0.6, 0.4}, pb = {0.5, 0.5};
    const long trials = 100000;
    long disagree = 0;
    for (long i = 0; i < trials; ++i) {
      const double u = rng.next_double();
      if (heuristic_sample(pa, u) != heuristic_sample(pb, u)) ++disagree;
    }
    const double rate = static_cast<double>(disagree) / trials;
    const double sigma = std::sqrt(0.1 * 0.9 / trials);
    s.check("sampling.heuristic-disagreement-example[0.1]",
            std::abs(rate - 0.1) <= 3.0 * sigma, "rate = " + fmt(rate));
  }
  return s.results;
}

std::vector<CheckResult> verify_gradients(int cases) {
  Suite s;
  RngStream rng = RngStream::from({0x6772, 4});
  const double fd_step = 1e-5;

  auto fd_check = [&](Head& head, std::span<const double> input,
                      std::span<const double> hidden, std::span<const double> cot) {
    std::vector<double> analytic(head.param_count(), 0.0);
    head.accumulate_grad(input, hidden, cot, analytic);
    std::vector<double> fd(head.param_count(), 0.0);
    std::vector<double> out(head.spec().output_dim), hout(hidden.size());
    for (int i = 0; i < head.param_count(); ++i) {
      const double keep = head.params()[i];
      double plus = 0.0, minus = 0.0;
      head.params()[i] = keep + fd_step;
      head.forward(input, hidden, out, hout);
      for (std::size_t k = 0; k < out.size(); ++k) plus += out[k] * cot[k];
      head.params()[i] = keep - fd_step;
      head.forward(input, hidden, out, hout);
      for (std::size_t k = 0; k < out.size(); ++k) minus += out[k] * cot[k];
      head.params()[i] = keep;
      fd[i] = (plus - minus) / (2.0 * fd_step);
    }
    double num = 0.0;
    for (int i = 0; i < head.param_count(); ++i)
      num = std::max(num, std::abs(analytic[i] - fd[i]));
    return num / std::max(max_abs(fd), 1e-6);
  };

  // Heads of every architecture.
  {
    bool ok = true;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
      HeadSpec spec;
      spec.kind = static_cast<HeadKind>(c % 3);
      spec.input_dim = 2 + static_cast<int>(rng.next_below(4));
      spec.output_dim = 1 + static_cast<int>(rng.next_below(4));
      spec.hidden_dim = spec.kind == HeadKind::kLinear ? 0 : 3;
      Head head(spec);
      head.init_params(rng, 0.8);
      std::vector<double> input(spec.input_dim), cot(spec.output_dim);
      std::vector<double> hidden(spec.kind == HeadKind::kGru ? spec.hidden_dim : 0);
      for (double& v : input) v = rng.next_normal();
      for (double& v : cot) v = rng.next_normal();
      for (double& v : hidden) v = rng.next_normal();
      const double rel = fd_check(head, input, hidden, cot);
      worst = std::max(worst, rel);
      if (rel > 1e-4) ok = false;
    }
    s.check("grad.heads-vs-central-differences[" + std::to_string(cases) + "]", ok,
            "worst rel err = " + fmt(worst));
  }

  // log joint probability through the whole tree.
  {
    bool ok = true;
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
      const int n = 2 + static_cast<int>(rng.next_below(2));
      const int acts = 2 + static_cast<int>(rng.next_below(2));
      const HeadKind kind = c % 4 == 0 ? HeadKind::kMlp : HeadKind::kLinear;
      PolicyTree tree = random_tree(rng, n, acts, 2, kind);
      StoredInputs inputs = random_inputs(tree, rng);
      const double eps = (c % 2 == 0) ? 0.0 : 0.2;
      std::vector<int> joint(n);
      for (int a = 0; a < n; ++a) joint[a] = static_cast<int>(rng.next_below(acts));

      std::vector<double> analytic(tree.param_count(), 0.0);
      tree.log_joint_grad(joint, inputs, eps, analytic);
      std::vector<double> params = tree.get_params();
      std::vector<double> fd(tree.param_count(), 0.0);
      for (int i = 0; i < tree.param_count(); ++i) {
        const double keep = params[i];
        params[i] = keep + fd_step;
        tree.set_params(params);
        const double plus = std::log(tree.joint_probability(joint, inputs, eps));
        params[i] = keep - fd_step;
        tree.set_params(params);
        const double minus = std::log(tree.joint_probability(joint, inputs, eps));
        params[i] = keep;
        fd[i] = (plus - minus) / (2.0 * fd_step);
      }
      tree.set_params(params);
      double num = 0.0;
      for (int i = 0; i < tree.param_count(); ++i)
        num = std::max(num, std::abs(analytic[i] - fd[i]));
      const double rel = num / std::max(max_abs(fd), 1e-6);
      worst = std::max(worst, rel);
      if (rel > 1e-4) ok = false;
    }
    s.check("grad.log-joint-policy-vs-central-differences[" + std::to_string(cases) + "]",
            ok, "worst rel err = " + fmt(worst));
  }

  // Value heads (scalar output) via unit cotangent.
  {
    bool ok = true;
    for (int c = 0; c < 20; ++c) {
      HeadSpec spec;
      spec.kind = c % 2 == 0 ? HeadKind::kLinear : HeadKind::kMlp;
      spec.input_dim = 4;
      spec.output_dim = 1;
      spec.hidden_dim = spec.kind == HeadKind::kLinear ? 0 : 5;
      Head head(spec);
      head.init_params(rng, 0.6);
      std::vector<double> input(spec.input_dim);
      for (double& v : input) v = rng.next_normal();
      const double cot[1] = {1.0};
      if (fd_check(head, input, {}, cot) > 1e-4) ok = false;
    }
    s.check("grad.value-head-vs-central-differences", ok);
  }
  return s.results;
}

std::vector<CheckResult> verify_envs() {
  Suite s;
  RngStream rng = RngStream::from({0x656e, 5});

  // Matrix observation frequencies against the generative tree.
  {
    MatrixGameConfig cfg;
    cfg.ck_fraction = 0.5;  // p_ck = 0.375
    const double p_ck = cfg.p_ck(), p_sigma = cfg.p_sigma();
    std::map<std::tuple<int, int, int, int>, long> counts;  // (game, bit, c1, c2)
    const long trials = 100000;
    for (long i = 0; i < trials; ++i) {
      const MatrixState st = matrix_reset(cfg, rng);
      ++counts[{static_cast<int>(st.game), st.ck_bit ? 1 : 0, st.obs[0].game_channel,
                st.obs[1].game_channel}];
    }
    auto expected = [&](int game, int bit, int c1, int c2) -> double {
      if (bit) return (c1 == game && c2 == game) ? 0.5 * p_ck : 0.0;
      const double p1 = c1 == game ? p_sigma : (c1 == kGameChannelNone ? 1 - p_sigma : 0.0);
      const double p2 = c2 == game ? p_sigma : (c2 == kGameChannelNone ? 1 - p_sigma : 0.0);
      return 0.5 * (1 - p_ck) * p1 * p2;
    };
    double chi2 = 0.0;
    int dof = -1;
    for (int game = 0; game < 2; ++game)
      for (int bit = 0; bit < 2; ++bit)
        for (int c1 : {game, kGameChannelNone})
          for (int c2 : {game, kGameChannelNone}) {
            const double e = expected(game, bit, c1, c2) * trials;
            if (e <= 0.0) continue;
            const double o = static_cast<double>(counts[{game, bit, c1, c2}]);
            chi2 += (o - e) * (o - e) / e;
            ++dof;
          }
    s.check("envs.matrix-observation-tree-chi2", chi2 <= chi_square_critical(dof, 0.01),
            "chi2 = " + fmt(chi2));
  }

  // Calibration: the per-agent game observation rate stays at 75%.
  {
    bool ok = true;
    for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      MatrixGameConfig cfg;
      cfg.ck_fraction = f;
      const long trials = 100000;
      long seen = 0;
      for (long i = 0; i < trials; ++i) {
        const MatrixState st = matrix_reset(cfg, rng);
        if (st.obs[0].game_channel != kGameChannelNone) ++seen;
      }
      const double rate = static_cast<double>(seen) / trials;
      const double sigma = std::sqrt(0.75 * 0.25 / trials);
      if (std::abs(rate - 0.75) > 3.0 * sigma) ok = false;
    }
    s.check("envs.matrix-calibration-75pct", ok);
  }

  // Payoff table read-back (independent literals).
  {
    static constexpr int a_rows[5][5] = {{5, 0, 0, 2, 0},
                                         {0, 1, 2, 4, 2},
                                         {0, 0, 0, 2, 0},
                                         {0, 0, 0, 1, 0},
                                         {0, 0, 0, 0, 5}};
    static constexpr int b_rows[5][5] = {{0, 0, 1, 0, 5},
                                         {0, 0, 2, 0, 0},
                                         {1, 2, 4, 2, 1},
                                         {0, 0, 2, 0, 0},
                                         {5, 0, 1, 0, 0}};
    bool ok = true;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        ok &= matrix_payoff(GameId::kA, i, j) == a_rows[i][j] / 5.0;
        ok &= matrix_payoff(GameId::kB, i, j) == b_rows[i][j] / 5.0;
      }
    s.check("envs.matrix-payoff-readback[50 entries]", ok);
  }

  // Gridworld observations are exactly the visible entity records.
  {
    GridWorldConfig cfg;
    GridWorld world(cfg);
    bool ok = true;
    for (int rep = 0; rep < 50 && ok; ++rep) {
      world.reset(rng);
      for (int a = 0; a < cfg.num_agents; ++a) {
        const EntityIdSet visible = visible_set(world.state(), a, world.mask());
        const std::vector<EntityState> obs = world.observation(a);
        if (obs.size() != visible.size()) {
          ok = false;
          break;
        }
        for (std::size_t i = 0; i < obs.size(); ++i) {
          if (obs[i].id != visible[i] ||
              obs[i].features != world.state().at(visible[i]).features)
            ok = false;
        }
      }
    }
    s.check("envs.gridworld-observation-exactness", ok);
  }
  return s.results;
}

std::vector<CheckResult> verify_suite(const std::string& suite) {
  if (suite == "ck") return verify_ck();
  if (suite == "tree") return verify_tree();
  if (suite == "sampling") return verify_sampling();
  if (suite == "gradients") return verify_gradients();
  if (suite == "envs") return verify_envs();
  if (suite == "all") {
    std::vector<CheckResult> all;
    for (const char* name : {"ck", "tree", "sampling", "gradients", "envs"}) {
      auto part = verify_suite(name);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw std::invalid_argument("unknown verify suite: " + suite);
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

}  // namespace mackrl

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

// Central-V actor-critic training of the policy hierarchy plus the IAC /
// JAL / CK-JAL baselines, with TD(lambda) critic targets, a target network,
// bounded-softmax exploration and delegation-rate diagnostics. Full runs are
// reproducible bit-exactly from (config, seed).

#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "mackrl/config.hpp"
#include "mackrl/tree.hpp"

namespace mackrl {

// Adapts an environment for training: episode control, group-keyed policy
// inputs from the central (true) view and from one agent's decentralised
// view, critic inputs (state + previous joint action) and CK-richness
// bucketing. A group of size one addresses the agent's own observation.
class EnvSession {
 public:
  virtual ~EnvSession() = default;

  virtual int num_agents() const = 0;
  virtual int num_actions() const = 0;
  virtual int group_input_dim(int group_size) const = 0;
  virtual int critic_input_dim() const = 0;

  virtual void begin_episode(std::uint64_t episode_uid) = 0;
  virtual bool done() const = 0;
  virtual double step(std::span<const int> joint_action) = 0;

  virtual void central_group_input(std::span<const int> group,
                                   std::span<double> out) const = 0;
  // Must derive from the agent's own observation only; the agent has to be a
  // member of the group.
  virtual void agent_group_input(int agent, std::span<const int> group,
                                 std::span<double> out) const = 0;
  virtual void critic_input(std::span<double> out) const = 0;

  virtual int ck_bucket(std::span<const int> pair_group) const = 0;
  virtual int num_ck_buckets() const = 0;
};

std::unique_ptr<EnvSession> make_env_session(const RunConfig& config,
                                             std::uint64_t run_seed);

// Decentralised view of one agent, backed by a live session.
class AgentView final : public NodeInputProvider {
 public:
  AgentView(const EnvSession& session, int agent) : session_(session), agent_(agent) {}
  void node_input(const PolicyNode& node, std::span<double> out) const override {
    session_.agent_group_input(agent_, node.group, out);
  }

 private:
  const EnvSession& session_;
  int agent_;
};

class CentralView final : public NodeInputProvider {
 public:
  explicit CentralView(const EnvSession& session) : session_(session) {}
  void node_input(const PolicyNode& node, std::span<double> out) const override {
    session_.central_group_input(node.group, out);
  }

 private:
  const EnvSession& session_;
};

// --- episode storage ---------------------------------------------------------

struct StepRecord {
  StoredInputs node_inputs;                    // central view, per tree node
  std::vector<std::vector<double>> agent_obs;  // per-agent observation encodings
  std::vector<double> central_ck;              // central full-group CK encoding
  std::vector<double> critic_in;               // (s_t, u_{t-1})
  std::vector<int> joint_action;
  double reward = 0.0;
  double eps = 0.0;  // behaviour exploration at collection time
};

struct EpisodeRecord {
  std::uint64_t episode_uid = 0;
  std::vector<StepRecord> steps;
  double undiscounted_return = 0.0;
  std::vector<std::pair<int, bool>> delegation;  // (ck bucket, delegated?)
};

struct EpisodeBatch {
  std::vector<EpisodeRecord> episodes;
  long total_steps() const;
};

// Backward lambda-return sweep over one episode. next_values[t] is the
// target-network value of (s_{t+1}, u_t); the final entry must be the
// terminal bootstrap (0 for finished episodes).
std::vector<double> lambda_returns(std::span<const double> rewards,
                                   std::span<const double> next_values, double gamma,
                                   double lambda);

// --- results -------------------------------------------------------------------

struct TrainResult {
  double final_greedy_return = 0.0;
  std::map<int, double> delegation_rate_by_bucket;  // greedy post-training
  int selected_restart = 0;
  long env_steps = 0;
};

// Trains per config. With restarts > 1, every restart trains from a derived
// seed and the one with the best end-of-training greedy evaluation is
// selected. When out_dir is nonempty, writes config.json, manifest.json,
// metrics.csv and final.ckpt there.
TrainResult train_run(const RunConfig& config, const std::string& out_dir);

}  // namespace mackrl

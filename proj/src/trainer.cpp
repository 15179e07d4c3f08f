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

#include "mackrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <stdexcept>

#include "mackrl/envs/gridworld.hpp"
#include "mackrl/envs/matrix_game.hpp"
#include "mackrl/sampling.hpp"

namespace mackrl {

namespace {

// Stream purposes / synthetic node ids for non-tree samplers.
constexpr std::uint64_t kEnvPurpose = 0x656e76;
constexpr std::uint64_t kInitPurpose = 0x696e6974;
constexpr std::uint64_t kRestartPurpose = 0x72737472;
constexpr std::uint64_t kIacNodeBase = 1000;
constexpr std::uint64_t kJalNode = 2000;
constexpr std::uint64_t kCkJalNode = 3000;
constexpr std::uint64_t kEvalUidBase = 1ULL << 62;

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void throw_if_not_finite(const std::vector<double>& params, const char* what,
                         long env_steps) {
  for (double v : params)
    if (!std::isfinite(v))
      throw TrainingDiverged(std::string("NaN/inf in ") + what + " after " +
                             std::to_string(env_steps) + " env steps");
}

// ---------------------------------------------------------------------------
// Matrix session
// ---------------------------------------------------------------------------

class MatrixSession final : public EnvSession {
 public:
  MatrixSession(const MatrixGameConfig& config, std::uint64_t run_seed)
      : cfg_(config), run_seed_(run_seed) {}

  int num_agents() const override { return 2; }
  int num_actions() const override { return kMatrixActions; }
  int group_input_dim(int) const override { return kMatrixCkInputDim; }
  int critic_input_dim() const override { return 3 + 2 * kMatrixActions; }

  void begin_episode(std::uint64_t uid) override {
    RngStream rng = RngStream::from({run_seed_, kEnvPurpose, uid});
    state_ = matrix_reset(cfg_, rng);
    last_action_ = {-1, -1};
    done_ = false;
  }
  bool done() const override { return done_; }

  double step(std::span<const int> joint) override {
    if (done_) throw std::logic_error("MatrixSession: episode finished");
    const double r = matrix_step(state_, joint[0], joint[1]);
    last_action_ = {joint[0], joint[1]};
    done_ = true;
    return r;
  }

  void central_group_input(std::span<const int> group, std::span<double> out) const override {
    if (group.size() >= 2) {
      encode_matrix_ck(state_.ck_bit,
                       state_.ck_bit ? static_cast<int>(state_.game) : kGameChannelNone,
                       out);
    } else {
      encode_matrix_obs(state_.obs[group[0]], out);
    }
  }

  void agent_group_input(int agent, std::span<const int> group,
                         std::span<double> out) const override {
    if (group.size() >= 2) {
      const MatrixObservation& o = state_.obs[agent];
      encode_matrix_ck(o.ck_bit, o.game_channel, out);
    } else {
      if (group[0] != agent)
        throw std::logic_error("matrix session: agent view asked for another agent's obs");
      encode_matrix_obs(state_.obs[agent], out);
    }
  }

  void critic_input(std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = state_.game == GameId::kA ? 1.0 : 0.0;
    out[1] = state_.game == GameId::kB ? 1.0 : 0.0;
    out[2] = state_.ck_bit ? 1.0 : 0.0;
    for (int a = 0; a < 2; ++a)
      if (last_action_[a] >= 0) out[3 + a * kMatrixActions + last_action_[a]] = 1.0;
  }

  int ck_bucket(std::span<const int>) const override { return state_.ck_bit ? 1 : 0; }
  int num_ck_buckets() const override { return 2; }

  const MatrixGameConfig& config() const { return cfg_; }

 private:
  MatrixGameConfig cfg_;
  std::uint64_t run_seed_;
  MatrixState state_;
  std::array<int, 2> last_action_ = {-1, -1};
  bool done_ = true;
};

// Belief view of a matrix observation, for exact greedy evaluation.
class MatrixBeliefProvider final : public NodeInputProvider {
 public:
  explicit MatrixBeliefProvider(const MatrixObservation& obs) : obs_(obs) {}
  void node_input(const PolicyNode& node, std::span<double> out) const override {
    if (node.group.size() >= 2)
      encode_matrix_ck(obs_.ck_bit, obs_.game_channel, out);
    else
      encode_matrix_obs(obs_, out);
  }

 private:
  MatrixObservation obs_;
};

// ---------------------------------------------------------------------------
// Gridworld session
// ---------------------------------------------------------------------------

class GridSession final : public EnvSession {
 public:
  GridSession(const GridWorldConfig& config, std::uint64_t run_seed)
      : world_(config), run_seed_(run_seed) {
    enc_.max_entities = config.num_entities();
    enc_.feature_dim = GridWorld::kFeatureDim;
    enc_.feature_scale = 1.0 / std::max(config.width, config.height);
  }

  int num_agents() const override { return world_.config().num_agents; }
  int num_actions() const override { return GridWorld::kNumActions; }
  int group_input_dim(int) const override { return enc_.size(); }
  int critic_input_dim() const override {
    return enc_.size() + num_agents() * num_actions();
  }

  void begin_episode(std::uint64_t uid) override {
    RngStream rng = RngStream::from({run_seed_, kEnvPurpose, uid});
    world_.reset(rng);
    last_action_.assign(num_agents(), -1);
  }
  bool done() const override { return world_.done(); }

  double step(std::span<const int> joint) override {
    const double r = world_.step(joint);
    last_action_.assign(joint.begin(), joint.end());
    return r;
  }

  void central_group_input(std::span<const int> group, std::span<double> out) const override {
    if (group.size() == 1) {
      enc_.encode(world_.observation(group[0]), out);
    } else {
      const EntityIdSet g(group.begin(), group.end());
      const CommonKnowledgeSet ck = common_knowledge(world_.state(), g, world_.mask());
      enc_.encode(ck.observation, out);
    }
  }

  void agent_group_input(int agent, std::span<const int> group,
                         std::span<double> out) const override {
    const std::vector<EntityState> seen = world_.observation(agent);
    if (group.size() == 1) {
      if (group[0] != agent)
        throw std::logic_error("grid session: agent view asked for another agent's obs");
      enc_.encode(seen, out);
      return;
    }
    WorldState perceived;
    perceived.entities = seen;
    const EntityIdSet g(group.begin(), group.end());
    const BeliefSet belief = belief_common_knowledge(perceived, agent, g, world_.mask());
    std::vector<EntityState> records;
    for (EntityId id : belief.entities) records.push_back(perceived.at(id));
    enc_.encode(records, out);
  }

  void critic_input(std::span<double> out) const override {
    enc_.encode(world_.state().entities, out.subspan(0, enc_.size()));
    auto tail = out.subspan(enc_.size());
    std::fill(tail.begin(), tail.end(), 0.0);
    for (int a = 0; a < num_agents(); ++a)
      if (last_action_[a] >= 0) tail[a * num_actions() + last_action_[a]] = 1.0;
  }

  int ck_bucket(std::span<const int> pair_group) const override {
    const EntityIdSet g(pair_group.begin(), pair_group.end());
    return static_cast<int>(common_knowledge(world_.state(), g, world_.mask()).entities.size());
  }
  int num_ck_buckets() const override { return world_.config().num_entities() + 1; }

 private:
  GridWorld world_;
  std::uint64_t run_seed_;
  EntityEncoding enc_;
  std::vector<int> last_action_;
};

}  // namespace

std::unique_ptr<EnvSession> make_env_session(const RunConfig& config,
                                             std::uint64_t run_seed) {
  if (config.env == "matrix")
    return std::make_unique<MatrixSession>(config.matrix, run_seed);
  if (config.env == "gridworld")
    return std::make_unique<GridSession>(config.grid, run_seed);
  throw std::invalid_argument("unknown env: " + config.env);
}

long EpisodeBatch::total_steps() const {
  long n = 0;
  for (const auto& ep : episodes) n += static_cast<long>(ep.steps.size());
  return n;
}

std::vector<double> lambda_returns(std::span<const double> rewards,
                                   std::span<const double> next_values, double gamma,
                                   double lambda) {
  if (rewards.size() != next_values.size())
    throw std::invalid_argument("lambda_returns: size mismatch");
  const int T = static_cast<int>(rewards.size());
  std::vector<double> g(T);
  double next_return = 0.0;  // G_{t+1}; unused at the terminal step
  for (int t = T - 1; t >= 0; --t) {
    if (t == T - 1) {
      g[t] = rewards[t] + gamma * next_values[t];
    } else {
      g[t] = rewards[t] + gamma * ((1.0 - lambda) * next_values[t] + lambda * next_return);
    }
    next_return = g[t];
  }
  return g;
}

namespace {

// ---------------------------------------------------------------------------
// Shared training machinery
// ---------------------------------------------------------------------------

double head_scalar(const Head& head, std::span<const double> input) {
  return head.forward_logits(input)[0];
}

struct CriticBundle {
  Head critic;
  Head target;
  AdamState adam;
  long updates = 0;

  explicit CriticBundle(HeadSpec spec) : critic(spec), target(spec) {}

  void init(RngStream& rng, double scale) {
    critic.init_params(rng, scale);
    target.params() = critic.params();
  }
  double value(std::span<const double> in) const { return head_scalar(critic, in); }
  double target_value(std::span<const double> in) const { return head_scalar(target, in); }
};

using StepInputFn = std::function<std::span<const double>(const EpisodeRecord&, int)>;

// lambda-returns with the target network; the final step bootstraps 0.
std::vector<double> episode_targets(const CriticBundle& critic, const EpisodeRecord& ep,
                                    const StepInputFn& input, double gamma, double lambda) {
  const int T = static_cast<int>(ep.steps.size());
  std::vector<double> rewards(T), next_values(T, 0.0);
  for (int t = 0; t < T; ++t) {
    rewards[t] = ep.steps[t].reward;
    if (t + 1 < T) next_values[t] = critic.target_value(input(ep, t + 1));
  }
  return lambda_returns(rewards, next_values, gamma, lambda);
}

// One full-batch regression step of V onto the lambda-returns.
void critic_regression(CriticBundle& critic, const EpisodeBatch& batch,
                       const StepInputFn& input, double gamma, double lambda,
                       const AdamConfig& adam_cfg, int sync_every, long env_steps) {
  std::vector<double> grad(critic.critic.param_count(), 0.0);
  const double total = static_cast<double>(batch.total_steps());
  for (const auto& ep : batch.episodes) {
    const std::vector<double> g = episode_targets(critic, ep, input, gamma, lambda);
    for (int t = 0; t < static_cast<int>(ep.steps.size()); ++t) {
      const auto in = input(ep, t);
      const double delta = critic.value(in) - g[t];
      const double cot[1] = {delta / total};
      critic.critic.accumulate_grad(in, {}, cot, grad);
    }
  }
  adam_step(critic.critic.params(), grad, critic.adam, adam_cfg);
  throw_if_not_finite(critic.critic.params(), "critic parameters", env_steps);
  if (++critic.updates % sync_every == 0) critic.target.params() = critic.critic.params();
}

// d log bounded_softmax(head(input))[action] / dtheta, times scale.
void accumulate_log_prob_grad(const Head& head, std::span<const double> input, int action,
                              double eps, double scale, std::span<double> grad,
                              std::vector<double>& cot_buf) {
  const std::vector<double> logits = head.forward_logits(input);
  const std::vector<double> soft = softmax(logits);
  const double dist_u =
      (1.0 - eps) * soft[action] + eps / static_cast<double>(soft.size());
  if (!(dist_u > 0.0))
    throw std::domain_error("taken action has zero probability");
  std::vector<double> adjoint(soft.size(), 0.0);
  adjoint[action] = scale / dist_u;
  cot_buf.assign(soft.size(), 0.0);
  bounded_softmax_backward(soft, adjoint, eps, cot_buf);
  head.accumulate_grad(input, {}, cot_buf, grad);
}

HeadKind arch_kind(const RunConfig& cfg) {
  return cfg.policy_arch == "mlp" ? HeadKind::kMlp : HeadKind::kLinear;
}

HeadSpec make_head_spec(const RunConfig& cfg, int input_dim, int output_dim) {
  HeadSpec spec;
  spec.kind = arch_kind(cfg);
  spec.hidden_dim = spec.kind == HeadKind::kLinear ? 0 : cfg.hidden_dim;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  return spec;
}

// ---------------------------------------------------------------------------
// Trainer base: collection loop, evaluation cadence, diagnostics
// ---------------------------------------------------------------------------

class TrainerBase {
 public:
  TrainerBase(const RunConfig& cfg, std::uint64_t restart_seed, MetricsWriter* metrics,
              std::string prefix)
      : cfg_(cfg),
        session_(make_env_session(cfg, restart_seed)),
        restart_seed_(restart_seed),
        metrics_(metrics),
        prefix_(std::move(prefix)) {}
  virtual ~TrainerBase() = default;

  TrainResult train() {
    while (env_steps_ < cfg_.total_env_steps) {
      const double eps = cfg_.schedule.at(env_steps_);
      const EpisodeBatch batch = collect(cfg_.batch_episodes, eps);
      env_steps_ += batch.total_steps();
      update(batch);
      ++updates_;

      double batch_return = 0.0;
      for (const auto& ep : batch.episodes) {
        batch_return += ep.undiscounted_return;
        for (const auto& [bucket, delegated] : ep.delegation) {
          auto& acc = delegation_acc_[bucket];
          acc.second += 1;
          acc.first += delegated ? 1 : 0;
        }
      }
      if (updates_ % cfg_.eval_every_updates == 0) {
        log("train", "epsilon", eps);
        log("train", "batch_return",
            batch_return / static_cast<double>(batch.episodes.size()));
        for (const auto& [bucket, acc] : delegation_acc_)
          if (acc.second > 0)
            log("train", "delegation_rate_bucket" + std::to_string(bucket),
                static_cast<double>(acc.first) / static_cast<double>(acc.second));
        delegation_acc_.clear();
        log("eval", "greedy_return", evaluate_greedy(eval_round_++));
      }
    }
    TrainResult res;
    res.final_greedy_return = evaluate_greedy(eval_round_++);
    res.env_steps = env_steps_;
    fill_final_diagnostics(res);
    log("eval", "greedy_return", res.final_greedy_return);
    for (const auto& [bucket, rate] : res.delegation_rate_by_bucket)
      log("eval", "delegation_rate_bucket" + std::to_string(bucket), rate);
    return res;
  }

  virtual std::vector<NamedHead> checkpoint_heads() const = 0;

 protected:
  virtual const PolicyTree* tree() const { return nullptr; }
  // Fills rec.joint_action from the current session state (decentralised);
  // may append delegation events to ep.delegation.
  virtual void select_joint(const SharedSeed& shared, std::uint64_t t, double eps,
                            StepRecord& rec, EpisodeRecord& ep) = 0;
  virtual void update(const EpisodeBatch& batch) = 0;
  virtual double evaluate_greedy(std::uint64_t round) = 0;
  // Greedy joint action on the live session (rollout evaluation).
  virtual void greedy_joint_on_session(std::span<int> out,
                                       std::vector<std::pair<int, bool>>* delegation) = 0;
  virtual void fill_final_diagnostics(TrainResult&) {}

  EpisodeBatch collect(int episodes, double eps) {
    EpisodeBatch batch;
    batch.episodes.reserve(episodes);
    const int n = session_->num_agents();
    for (int e = 0; e < episodes; ++e) {
      EpisodeRecord ep;
      ep.episode_uid = episode_uid_++;
      session_->begin_episode(ep.episode_uid);
      const SharedSeed shared{restart_seed_, ep.episode_uid};
      std::uint64_t t = 0;
      while (!session_->done()) {
        StepRecord rec;
        rec.eps = eps;
        if (tree()) {
          auto& by_node = rec.node_inputs.by_node();
          by_node.resize(tree()->nodes().size());
          for (const auto& node : tree()->nodes()) {
            by_node[node.id].resize(node.base_input_dim);
            session_->central_group_input(node.group, by_node[node.id]);
          }
        }
        rec.agent_obs.resize(n);
        for (int a = 0; a < n; ++a) {
          rec.agent_obs[a].resize(session_->group_input_dim(1));
          const int self[1] = {a};
          session_->agent_group_input(a, self, rec.agent_obs[a]);
        }
        rec.central_ck.resize(session_->group_input_dim(n));
        {
          std::vector<int> all(n);
          for (int a = 0; a < n; ++a) all[a] = a;
          session_->central_group_input(all, rec.central_ck);
        }
        rec.critic_in.resize(session_->critic_input_dim());
        session_->critic_input(rec.critic_in);
        rec.joint_action.assign(n, -1);
        select_joint(shared, t, eps, rec, ep);
        rec.reward = session_->step(rec.joint_action);
        ep.undiscounted_return += rec.reward;
        ep.steps.push_back(std::move(rec));
        ++t;
      }
      batch.episodes.push_back(std::move(ep));
    }
    return batch;
  }

  // Mean undiscounted greedy return over rollout episodes; optionally
  // accumulates delegation rates per CK bucket.
  double rollout_greedy(int episodes, std::uint64_t round,
                        std::map<int, double>* delegation_rates) {
    const int n = session_->num_agents();
    double total = 0.0;
    std::map<int, std::pair<long, long>> acc;
    std::vector<int> joint(n);
    std::vector<std::pair<int, bool>> events;
    for (int e = 0; e < episodes; ++e) {
      session_->begin_episode(kEvalUidBase + round * 1000003ULL + e);
      while (!session_->done()) {
        events.clear();
        greedy_joint_on_session(joint, delegation_rates ? &events : nullptr);
        for (const auto& [bucket, delegated] : events) {
          acc[bucket].second += 1;
          acc[bucket].first += delegated ? 1 : 0;
        }
        total += session_->step(joint);
      }
    }
    if (delegation_rates)
      for (const auto& [bucket, counts] : acc)
        if (counts.second > 0)
          (*delegation_rates)[bucket] =
              static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return total / episodes;
  }

  void log(const std::string& phase, const std::string& metric, double v) {
    if (metrics_) metrics_->add(env_steps_, phase, prefix_ + metric, v);
  }

  RunConfig cfg_;
  std::unique_ptr<EnvSession> session_;
  std::uint64_t restart_seed_;
  MetricsWriter* metrics_;
  std::string prefix_;
  long env_steps_ = 0;
  long updates_ = 0;
  std::uint64_t episode_uid_ = 0;
  std::uint64_t eval_round_ = 0;
  std::map<int, std::pair<long, long>> delegation_acc_;
};

// ---------------------------------------------------------------------------
// MACKRL / Central-V (policy tree with central critic)
// ---------------------------------------------------------------------------

class TreeTrainer final : public TrainerBase {
 public:
  TreeTrainer(const RunConfig& cfg, std::uint64_t restart_seed, MetricsWriter* metrics,
              std::string prefix)
      : TrainerBase(cfg, restart_seed, metrics, std::move(prefix)),
        critic_(make_head_spec(cfg, session_->critic_input_dim(), 1)) {
    PairwiseTreeConfig tc;
    tc.num_agents = session_->num_agents();
    tc.actions_per_agent.assign(tc.num_agents, session_->num_actions());
    tc.selector_input_dim = session_->group_input_dim(tc.num_agents);
    tc.pair_input_dim = session_->group_input_dim(2);
    tc.individual_input_dim = session_->group_input_dim(1);
    tc.arch.kind = arch_kind(cfg);
    tc.arch.hidden_dim = cfg.hidden_dim;
    tc.partition_subsample = cfg.partition_subsample;
    // The partition subset is fixed per run (not per restart).
    tc.subsample_seed = cfg.seed;
    tc.singleton_root = cfg.algorithm == "central-v";
    tree_ = PolicyTree::make_pairwise(tc);

    RngStream init = RngStream::from({restart_seed_, kInitPurpose});
    tree_.init_params(init, cfg.init_scale, cfg.index_init_scale);
    critic_.init(init, cfg.init_scale);
    policy_adam_ = AdamState(static_cast<std::size_t>(tree_.param_count()));
  }

  std::vector<NamedHead> checkpoint_heads() const override {
    std::vector<NamedHead> out;
    for (std::size_t i = 0; i < tree_.heads().size(); ++i)
      out.push_back({"policy.head" + std::to_string(i), &tree_.heads()[i]});
    out.push_back({"critic", &critic_.critic});
    return out;
  }

 protected:
  const PolicyTree* tree() const override { return &tree_; }

  void select_joint(const SharedSeed& shared, std::uint64_t t, double eps,
                    StepRecord& rec, EpisodeRecord& ep) override {
    std::vector<SelectionStep> trace;
    for (int a = 0; a < session_->num_agents(); ++a) {
      trace.clear();
      AgentView view(*session_, a);
      rec.joint_action[a] = tree_.select_action(a, view, shared, t, eps, false, &trace);
      for (const auto& step : trace) {
        const PolicyNode& node = tree_.nodes()[step.node_id];
        if (node.level == 1 && node.group[0] == a)
          ep.delegation.emplace_back(session_->ck_bucket(node.group),
                                     step.action_index >= node.num_env_actions);
      }
    }
  }

  void update(const EpisodeBatch& batch) override {
    const StepInputFn critic_in = [](const EpisodeRecord& ep, int t) {
      return std::span<const double>(ep.steps[t].critic_in);
    };
    critic_regression(critic_, batch, critic_in, cfg_.gamma, cfg_.td_lambda,
                      {cfg_.critic_lr}, cfg_.target_sync_every, env_steps_);

    std::vector<double> grad(tree_.param_count(), 0.0);
    std::vector<double> step_grad(tree_.param_count());
    const double total = static_cast<double>(batch.total_steps());
    for (const auto& ep : batch.episodes) {
      const int T = static_cast<int>(ep.steps.size());
      for (int t = 0; t < T; ++t) {
        const auto& rec = ep.steps[t];
        const double v_cur = critic_.value(rec.critic_in);
        const double v_next =
            t + 1 < T ? critic_.value(ep.steps[t + 1].critic_in) : 0.0;
        const double advantage = rec.reward + cfg_.gamma * v_next - v_cur;
        std::fill(step_grad.begin(), step_grad.end(), 0.0);
        tree_.log_joint_grad(rec.joint_action, rec.node_inputs, rec.eps, step_grad);
        const double w = advantage / total;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= w * step_grad[i];
      }
    }
    std::vector<double> params = tree_.get_params();
    adam_step(params, grad, policy_adam_, {cfg_.policy_lr});
    throw_if_not_finite(params, "policy parameters", env_steps_);
    tree_.set_params(params);
  }

  double evaluate_greedy(std::uint64_t round) override {
    if (cfg_.env == "matrix") {
      const auto& mcfg = static_cast<const MatrixSession&>(*session_).config();
      return matrix_exact_return(mcfg, [&](int agent, const MatrixObservation& obs) {
        MatrixBeliefProvider view(obs);
        return tree_.select_action(agent, view, {}, 0, 0.0, true);
      });
    }
    return rollout_greedy(cfg_.eval_episodes, round, nullptr);
  }

  void greedy_joint_on_session(std::span<int> out,
                               std::vector<std::pair<int, bool>>* delegation) override {
    std::vector<SelectionStep> trace;
    for (int a = 0; a < session_->num_agents(); ++a) {
      trace.clear();
      AgentView view(*session_, a);
      out[a] = tree_.select_action(a, view, {}, 0, 0.0, true,
                                   delegation ? &trace : nullptr);
      if (delegation)
        for (const auto& step : trace) {
          const PolicyNode& node = tree_.nodes()[step.node_id];
          if (node.level == 1 && node.group[0] == a)
            delegation->emplace_back(session_->ck_bucket(node.group),
                                     step.action_index >= node.num_env_actions);
        }
    }
  }

  void fill_final_diagnostics(TrainResult& res) override {
    std::map<int, double> rates;
    rollout_greedy(std::max(cfg_.eval_episodes, 20), eval_round_++, &rates);
    res.delegation_rate_by_bucket = std::move(rates);
  }

 private:
  PolicyTree tree_;
  CriticBundle critic_;
  AdamState policy_adam_;
};

// ---------------------------------------------------------------------------
// IAC: independent per-agent actors and critics on own observations
// ---------------------------------------------------------------------------

class IacTrainer final : public TrainerBase {
 public:
  IacTrainer(const RunConfig& cfg, std::uint64_t restart_seed, MetricsWriter* metrics,
             std::string prefix)
      : TrainerBase(cfg, restart_seed, metrics, std::move(prefix)) {
    RngStream init = RngStream::from({restart_seed_, kInitPurpose});
    const int n = session_->num_agents();
    for (int a = 0; a < n; ++a) {
      actors_.emplace_back(
          make_head_spec(cfg, session_->group_input_dim(1), session_->num_actions()));
      actors_.back().init_params(init, cfg.init_scale);
      actor_adam_.emplace_back(
          static_cast<std::size_t>(actors_.back().param_count()));
      critics_.emplace_back(make_head_spec(cfg, session_->group_input_dim(1), 1));
      critics_.back().init(init, cfg.init_scale);
    }
  }

  std::vector<NamedHead> checkpoint_heads() const override {
    std::vector<NamedHead> out;
    for (std::size_t a = 0; a < actors_.size(); ++a) {
      out.push_back({"actor" + std::to_string(a), &actors_[a]});
      out.push_back({"critic" + std::to_string(a), &critics_[a].critic});
    }
    return out;
  }

 protected:
  void select_joint(const SharedSeed& shared, std::uint64_t t, double eps,
                    StepRecord& rec, EpisodeRecord&) override {
    for (int a = 0; a < session_->num_agents(); ++a) {
      const std::vector<double> dist =
          bounded_softmax(actors_[a].forward_logits(rec.agent_obs[a]), eps);
      RngStream stream = shared.stream(t, kIacNodeBase + a);
      rec.joint_action[a] = heuristic_sample(dist, stream.next_double());
    }
  }

  void update(const EpisodeBatch& batch) override {
    const double total = static_cast<double>(batch.total_steps());
    std::vector<double> cot;
    for (int a = 0; a < session_->num_agents(); ++a) {
      const StepInputFn obs_in = [a](const EpisodeRecord& ep, int t) {
        return std::span<const double>(ep.steps[t].agent_obs[a]);
      };
      critic_regression(critics_[a], batch, obs_in, cfg_.gamma, cfg_.td_lambda,
                        {cfg_.critic_lr}, cfg_.target_sync_every, env_steps_);
      std::vector<double> grad(actors_[a].param_count(), 0.0);
      for (const auto& ep : batch.episodes) {
        const int T = static_cast<int>(ep.steps.size());
        for (int t = 0; t < T; ++t) {
          const auto& rec = ep.steps[t];
          const double v_cur = critics_[a].value(rec.agent_obs[a]);
          const double v_next =
              t + 1 < T ? critics_[a].value(ep.steps[t + 1].agent_obs[a]) : 0.0;
          const double advantage = rec.reward + cfg_.gamma * v_next - v_cur;
          accumulate_log_prob_grad(actors_[a], rec.agent_obs[a], rec.joint_action[a],
                                   rec.eps, -advantage / total, grad, cot);
        }
      }
      adam_step(actors_[a].params(), grad, actor_adam_[a], {cfg_.policy_lr});
      throw_if_not_finite(actors_[a].params(), "actor parameters", env_steps_);
    }
  }

  double evaluate_greedy(std::uint64_t round) override {
    if (cfg_.env == "matrix") {
      const auto& mcfg = static_cast<const MatrixSession&>(*session_).config();
      return matrix_exact_return(mcfg, [&](int agent, const MatrixObservation& obs) {
        std::vector<double> in(kMatrixObsInputDim);
        encode_matrix_obs(obs, in);
        return argmax_lowest(actors_[agent].forward_logits(in));
      });
    }
    return rollout_greedy(cfg_.eval_episodes, round, nullptr);
  }

  void greedy_joint_on_session(std::span<int> out,
                               std::vector<std::pair<int, bool>>*) override {
    const int n = session_->num_agents();
    std::vector<double> in(session_->group_input_dim(1));
    for (int a = 0; a < n; ++a) {
      const int self[1] = {a};
      session_->agent_group_input(a, self, in);
      out[a] = argmax_lowest(actors_[a].forward_logits(in));
    }
  }

 private:
  std::vector<Head> actors_;
  std::vector<AdamState> actor_adam_;
  std::vector<CriticBundle> critics_;
};

// ---------------------------------------------------------------------------
// JAL (matrix only): centralised joint policy on both observations
// CK-JAL (matrix only): decentralised joint policy on the CK state
// ---------------------------------------------------------------------------

class JointTrainer final : public TrainerBase {
 public:
  JointTrainer(const RunConfig& cfg, std::uint64_t restart_seed, MetricsWriter* metrics,
               std::string prefix)
      : TrainerBase(cfg, restart_seed, metrics, std::move(prefix)),
        ck_only_(cfg.algorithm == "ck-jal"),
        head_(make_head_spec(cfg,
                             ck_only_ ? kMatrixCkInputDim : 2 * kMatrixObsInputDim,
                             kMatrixActions * kMatrixActions)),
        critic_(make_head_spec(cfg, session_->critic_input_dim(), 1)) {
    RngStream init = RngStream::from({restart_seed_, kInitPurpose});
    head_.init_params(init, cfg.init_scale);
    critic_.init(init, cfg.init_scale);
    head_adam_ = AdamState(static_cast<std::size_t>(head_.param_count()));
  }

  std::vector<NamedHead> checkpoint_heads() const override {
    return {{"policy", &head_}, {"critic", &critic_.critic}};
  }

 protected:
  void select_joint(const SharedSeed& shared, std::uint64_t t, double eps,
                    StepRecord& rec, EpisodeRecord&) override {
    if (ck_only_) {
      // Each agent samples its belief-conditioned joint policy with the same
      // shared uniform and executes its own component.
      RngStream stream = shared.stream(t, kCkJalNode);
      const double u = stream.next_double();
      const std::array<int, 2> group = {0, 1};
      std::vector<double> in(kMatrixCkInputDim);
      for (int a = 0; a < 2; ++a) {
        session_->agent_group_input(a, group, in);
        const std::vector<double> dist = bounded_softmax(head_.forward_logits(in), eps);
        const int joint = heuristic_sample(dist, u);
        rec.joint_action[a] = a == 0 ? joint / kMatrixActions : joint % kMatrixActions;
      }
    } else {
      const std::vector<double> in = joint_obs_input(rec);
      const std::vector<double> dist = bounded_softmax(head_.forward_logits(in), eps);
      RngStream stream = shared.stream(t, kJalNode);
      const int joint = heuristic_sample(dist, stream.next_double());
      rec.joint_action[0] = joint / kMatrixActions;
      rec.joint_action[1] = joint % kMatrixActions;
    }
  }

  void update(const EpisodeBatch& batch) override {
    const StepInputFn critic_in = [](const EpisodeRecord& ep, int t) {
      return std::span<const double>(ep.steps[t].critic_in);
    };
    critic_regression(critic_, batch, critic_in, cfg_.gamma, cfg_.td_lambda,
                      {cfg_.critic_lr}, cfg_.target_sync_every, env_steps_);
    std::vector<double> grad(head_.param_count(), 0.0);
    std::vector<double> cot;
    const double total = static_cast<double>(batch.total_steps());
    for (const auto& ep : batch.episodes) {
      for (int t = 0; t < static_cast<int>(ep.steps.size()); ++t) {
        const auto& rec = ep.steps[t];
        const double advantage = rec.reward - critic_.value(rec.critic_in);
        const int joint = rec.joint_action[0] * kMatrixActions + rec.joint_action[1];
        const std::vector<double> in = ck_only_
                                           ? rec.central_ck
                                           : joint_obs_input(rec);
        accumulate_log_prob_grad(head_, in, joint, rec.eps, -advantage / total, grad,
                                 cot);
      }
    }
    adam_step(head_.params(), grad, head_adam_, {cfg_.policy_lr});
    throw_if_not_finite(head_.params(), "policy parameters", env_steps_);
  }

  double evaluate_greedy(std::uint64_t) override {
    const auto& mcfg = static_cast<const MatrixSession&>(*session_).config();
    if (ck_only_) {
      return matrix_exact_return(mcfg, [&](int agent, const MatrixObservation& obs) {
        std::vector<double> in(kMatrixCkInputDim);
        encode_matrix_ck(obs.ck_bit, obs.game_channel, in);
        const int joint = argmax_lowest(head_.forward_logits(in));
        return agent == 0 ? joint / kMatrixActions : joint % kMatrixActions;
      });
    }
    return matrix_exact_return_joint(
        mcfg, [&](const MatrixObservation& o1, const MatrixObservation& o2) {
          std::vector<double> in(2 * kMatrixObsInputDim);
          encode_matrix_obs(o1, std::span<double>(in).subspan(0, kMatrixObsInputDim));
          encode_matrix_obs(o2, std::span<double>(in).subspan(kMatrixObsInputDim));
          const int joint = argmax_lowest(head_.forward_logits(in));
          return std::pair<int, int>(joint / kMatrixActions, joint % kMatrixActions);
        });
  }

  void greedy_joint_on_session(std::span<int> out,
                               std::vector<std::pair<int, bool>>*) override {
    const std::array<int, 2> group = {0, 1};
    std::vector<double> in(kMatrixCkInputDim);
    if (ck_only_) {
      for (int a = 0; a < 2; ++a) {
        session_->agent_group_input(a, group, in);
        const int joint = argmax_lowest(head_.forward_logits(in));
        out[a] = a == 0 ? joint / kMatrixActions : joint % kMatrixActions;
      }
      return;
    }
    std::vector<double> jin(2 * kMatrixObsInputDim);
    for (int a = 0; a < 2; ++a) {
      const int self[1] = {a};
      session_->agent_group_input(
          a, self, std::span<double>(jin).subspan(a * kMatrixObsInputDim,
                                                  kMatrixObsInputDim));
    }
    const int joint = argmax_lowest(head_.forward_logits(jin));
    out[0] = joint / kMatrixActions;
    out[1] = joint % kMatrixActions;
  }

 private:
  static std::vector<double> joint_obs_input(const StepRecord& rec) {
    std::vector<double> in;
    in.reserve(2 * kMatrixObsInputDim);
    in.insert(in.end(), rec.agent_obs[0].begin(), rec.agent_obs[0].end());
    in.insert(in.end(), rec.agent_obs[1].begin(), rec.agent_obs[1].end());
    return in;
  }

  bool ck_only_;
  Head head_;
  CriticBundle critic_;
  AdamState head_adam_;
};

std::unique_ptr<TrainerBase> make_trainer(const RunConfig& cfg, std::uint64_t restart_seed,
                                          MetricsWriter* metrics, std::string prefix) {
  if (cfg.algorithm == "mackrl" || cfg.algorithm == "central-v")
    return std::make_unique<TreeTrainer>(cfg, restart_seed, metrics, std::move(prefix));
  if (cfg.algorithm == "iac")
    return std::make_unique<IacTrainer>(cfg, restart_seed, metrics, std::move(prefix));
  if (cfg.algorithm == "jal" || cfg.algorithm == "ck-jal")
    return std::make_unique<JointTrainer>(cfg, restart_seed, metrics, std::move(prefix));
  throw std::invalid_argument("unknown algorithm: " + cfg.algorithm);
}

}  // namespace

TrainResult train_run(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const std::string run_id = make_run_id(config);
  std::unique_ptr<MetricsWriter> metrics;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_config((std::filesystem::path(out_dir) / "config.json").string(), config);
    write_manifest(out_dir, config, run_id);
    metrics = std::make_unique<MetricsWriter>(
        (std::filesystem::path(out_dir) / "metrics.csv").string(), run_id, config.seed);
  }

  std::unique_ptr<TrainerBase> best;
  TrainResult best_result;
  for (int k = 0; k < config.restarts; ++k) {
    const std::uint64_t restart_seed = derive_key({config.seed, kRestartPurpose,
                                                   static_cast<std::uint64_t>(k)});
    const std::string prefix =
        config.restarts > 1 ? "restart" + std::to_string(k) + "." : "";
    auto trainer = make_trainer(config, restart_seed, metrics.get(), prefix);
    TrainResult result = trainer->train();
    result.selected_restart = k;
    if (!best || result.final_greedy_return > best_result.final_greedy_return) {
      best = std::move(trainer);
      best_result = result;
    }
  }

  if (metrics) {
    metrics->add(best_result.env_steps, "eval", "selected_restart",
                 best_result.selected_restart);
    metrics->add(best_result.env_steps, "eval", "greedy_return",
                 best_result.final_greedy_return);
    for (const auto& [bucket, rate] : best_result.delegation_rate_by_bucket)
      metrics->add(best_result.env_steps, "eval",
                   "delegation_rate_bucket" + std::to_string(bucket), rate);
    metrics->flush();
  }
  if (!out_dir.empty())
    save_checkpoint((std::filesystem::path(out_dir) / "final.ckpt").string(),
                    best->checkpoint_heads(), config.seed);
  return best_result;
}

}  // namespace mackrl

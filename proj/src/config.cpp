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

#include "mackrl/config.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mackrl/version.hpp"

namespace mackrl {

void RunConfig::validate() const {
  static const std::set<std::string> envs = {"matrix", "gridworld"};
  static const std::set<std::string> algos = {"mackrl", "central-v", "iac", "jal", "ck-jal"};
  if (!envs.count(env)) throw std::invalid_argument("config: unknown env '" + env + "'");
  if (!algos.count(algorithm))
    throw std::invalid_argument("config: unknown algorithm '" + algorithm + "'");
  if ((algorithm == "jal" || algorithm == "ck-jal") && env != "matrix")
    throw std::invalid_argument("config: " + algorithm + " is defined for the matrix env only");
  if (matrix.ck_fraction < 0.0 || matrix.ck_fraction > 1.0)
    throw std::invalid_argument("config: matrix.ck_fraction outside [0,1]");
  if (matrix.flip_p < 0.0 || matrix.flip_p > 1.0)
    throw std::invalid_argument("config: matrix.flip_p outside [0,1]");
  if (total_env_steps <= 0 || batch_episodes <= 0 || restarts <= 0)
    throw std::invalid_argument("config: step/batch/restart counts must be positive");
  if (policy_arch != "linear" && policy_arch != "mlp")
    throw std::invalid_argument("config: unknown policy_arch '" + policy_arch + "'");
  if (td_lambda < 0.0 || td_lambda > 1.0)
    throw std::invalid_argument("config: td_lambda outside [0,1]");
}

nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"env", c.env},
      {"algorithm", c.algorithm},
      {"matrix", {{"ck_fraction", c.matrix.ck_fraction}, {"flip_p", c.matrix.flip_p}}},
      {"grid",
       {{"width", c.grid.width},
        {"height", c.grid.height},
        {"num_agents", c.grid.num_agents},
        {"num_prey", c.grid.num_prey},
        {"fov_radius", c.grid.fov_radius},
        {"horizon", c.grid.horizon},
        {"capture_reward", c.grid.capture_reward},
        {"step_penalty", c.grid.step_penalty}}},
      {"seed", c.seed},
      {"total_env_steps", c.total_env_steps},
      {"batch_episodes", c.batch_episodes},
      {"parallel_envs", c.parallel_envs},
      {"restarts", c.restarts},
      {"policy_lr", c.policy_lr},
      {"critic_lr", c.critic_lr},
      {"gamma", c.gamma},
      {"td_lambda", c.td_lambda},
      {"target_sync_every", c.target_sync_every},
      {"schedule",
       {{"eps_start", c.schedule.eps_start},
        {"eps_end", c.schedule.eps_end},
        {"horizon", c.schedule.horizon}}},
      {"policy_arch", c.policy_arch},
      {"hidden_dim", c.hidden_dim},
      {"init_scale", c.init_scale},
      {"index_init_scale", c.index_init_scale},
      {"partition_subsample", c.partition_subsample},
      {"eval_every_updates", c.eval_every_updates},
      {"eval_episodes", c.eval_episodes},
  };
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  const nlohmann::json ref = config_to_json(c);
  for (const auto& [key, _] : j.items())
    if (!ref.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "'");

  c.env = j.value("env", c.env);
  c.algorithm = j.value("algorithm", c.algorithm);
  if (j.contains("matrix")) {
    c.matrix.ck_fraction = j["matrix"].value("ck_fraction", c.matrix.ck_fraction);
    c.matrix.flip_p = j["matrix"].value("flip_p", c.matrix.flip_p);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.grid.width = g.value("width", c.grid.width);
    c.grid.height = g.value("height", c.grid.height);
    c.grid.num_agents = g.value("num_agents", c.grid.num_agents);
    c.grid.num_prey = g.value("num_prey", c.grid.num_prey);
    c.grid.fov_radius = g.value("fov_radius", c.grid.fov_radius);
    c.grid.horizon = g.value("horizon", c.grid.horizon);
    c.grid.capture_reward = g.value("capture_reward", c.grid.capture_reward);
    c.grid.step_penalty = g.value("step_penalty", c.grid.step_penalty);
  }
  c.seed = j.value("seed", c.seed);
  c.total_env_steps = j.value("total_env_steps", c.total_env_steps);
  c.batch_episodes = j.value("batch_episodes", c.batch_episodes);
  c.parallel_envs = j.value("parallel_envs", c.parallel_envs);
  c.restarts = j.value("restarts", c.restarts);
  c.policy_lr = j.value("policy_lr", c.policy_lr);
  c.critic_lr = j.value("critic_lr", c.critic_lr);
  c.gamma = j.value("gamma", c.gamma);
  c.td_lambda = j.value("td_lambda", c.td_lambda);
  c.target_sync_every = j.value("target_sync_every", c.target_sync_every);
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    c.schedule.eps_start = s.value("eps_start", c.schedule.eps_start);
    c.schedule.eps_end = s.value("eps_end", c.schedule.eps_end);
    c.schedule.horizon = s.value("horizon", c.schedule.horizon);
  }
  c.policy_arch = j.value("policy_arch", c.policy_arch);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.init_scale = j.value("init_scale", c.init_scale);
  c.index_init_scale = j.value("index_init_scale", c.index_init_scale);
  c.partition_subsample = j.value("partition_subsample", c.partition_subsample);
  c.eval_every_updates = j.value("eval_every_updates", c.eval_every_updates);
  c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  f >> j;
  return config_from_json(j);
}

void save_config(const std::string& path, const RunConfig& config) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write config file: " + path);
  f << config_to_json(config).dump(2) << "\n";
}

RunConfig matrix_default_config() {
  RunConfig c;
  c.env = "matrix";
  c.algorithm = "mackrl";
  c.total_env_steps = 200000;  // episodes; the game is single-step
  c.batch_episodes = 64;
  c.restarts = 5;
  c.policy_lr = 0.005;
  c.critic_lr = 0.005;
  c.gamma = 1.0;
  c.policy_arch = "linear";
  c.init_scale = 0.1;
  c.index_init_scale = 1.0;
  c.eval_every_updates = 250;
  return c;
}

RunConfig gridworld_default_config() {
  RunConfig c;
  c.env = "gridworld";
  c.algorithm = "mackrl";
  c.total_env_steps = 200000;
  c.batch_episodes = 8;
  c.restarts = 1;
  c.policy_lr = 0.0005;
  c.critic_lr = 0.0005;
  c.gamma = 0.99;
  c.policy_arch = "mlp";
  c.hidden_dim = 16;
  c.init_scale = 0.1;
  c.index_init_scale = 0.1;
  c.eval_every_updates = 100;
  c.eval_episodes = 20;
  return c;
}

void set_config_param(RunConfig& config, const std::string& name, const std::string& value) {
  nlohmann::json j = config_to_json(config);
  nlohmann::json* slot = &j;
  std::stringstream ss(name);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!slot->contains(part))
      throw std::invalid_argument("config parameter does not exist: " + name);
    slot = &(*slot)[part];
  }
  if (slot->is_string()) {
    *slot = value;
  } else if (slot->is_number_integer() || slot->is_number_unsigned()) {
    *slot = std::stoll(value);
  } else {
    *slot = std::stod(value);
  }
  config = config_from_json(j);
}

MetricsWriter::MetricsWriter(const std::string& path, std::string run_id, std::uint64_t seed)
    : out_(path), run_id_(std::move(run_id)), seed_(seed) {
  if (!out_) throw std::runtime_error("cannot open metrics file: " + path);
  out_ << kHeader << "\n";
}

void MetricsWriter::add(long env_steps, const std::string& phase,
                        const std::string& metric, double value) {
  if (!std::isfinite(value))
    throw std::runtime_error("metric '" + metric + "' is not finite");
  out_ << run_id_ << ',' << seed_ << ',' << env_steps << ',' << phase << ','
       << metric << ',' << value << "\n";
}

std::string code_version() { return kSourceVersion; }

std::string make_run_id(const RunConfig& config) {
  const std::string blob = code_version() + config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : blob) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_manifest(const std::string& dir, const RunConfig& config,
                    const std::string& run_id) {
  nlohmann::json m;
  m["run_id"] = run_id;
  m["code_version"] = code_version();
  m["config"] = config_to_json(config);
  m["seeds"] = {config.seed};
  m["outputs"] = {{"metrics", "metrics.csv"},
                  {"checkpoint", "final.ckpt"},
                  {"config", "config.json"}};
  std::ofstream f(std::filesystem::path(dir) / "manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  f << m.dump(2) << "\n";
}

}  // namespace mackrl

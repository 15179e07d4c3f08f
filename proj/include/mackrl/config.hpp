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

// Run configuration, metric CSV emission and the run manifest.

#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mackrl/envs/gridworld.hpp"
#include "mackrl/envs/matrix_game.hpp"
#include "mackrl/heads.hpp"

namespace mackrl {

struct RunConfig {
  std::string env = "matrix";        // matrix | gridworld
  std::string algorithm = "mackrl";  // mackrl | central-v | iac | jal | ck-jal
  MatrixGameConfig matrix;
  GridWorldConfig grid;

  std::uint64_t seed = 1;
  long total_env_steps = 200000;
  int batch_episodes = 64;
  int parallel_envs = 8;
  int restarts = 1;

  double policy_lr = 0.005;
  double critic_lr = 0.005;
  double gamma = 1.0;
  double td_lambda = 0.8;
  int target_sync_every = 200;
  ExplorationSchedule schedule;

  std::string policy_arch = "linear";  // linear | mlp
  int hidden_dim = 16;
  double init_scale = 0.1;
  double index_init_scale = 1.0;
  int partition_subsample = 0;  // 0 keeps every pairwise partition

  int eval_every_updates = 50;
  int eval_episodes = 20;

  void validate() const;  // throws std::invalid_argument
};

// Every field is serialized explicitly; loading rejects unknown keys.
nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& config);

// Presets matching the experiment scales in the test suite.
RunConfig matrix_default_config();
RunConfig gridworld_default_config();

// Sets a config field by dotted name (e.g. "matrix.flip_p",
// "partition_subsample") from a string value. Throws if the parameter does
// not exist.
void set_config_param(RunConfig& config, const std::string& name, const std::string& value);

// One row per record: run_id, seed, env_steps, phase{train|eval}, metric, value.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, std::string run_id, std::uint64_t seed);

  // Throws on non-finite values (the CSV never carries NaN).
  void add(long env_steps, const std::string& phase, const std::string& metric,
           double value);
  void flush() { out_.flush(); }

  static constexpr const char* kHeader = "run_id,seed,env_steps,phase,metric,value";

 private:
  std::ofstream out_;
  std::string run_id_;
  std::uint64_t seed_;
};

// Configure-time hash of the source tree (see version.hpp.in).
std::string code_version();

// Short content id for a run: code version + config + seed.
std::string make_run_id(const RunConfig& config);

void write_manifest(const std::string& dir, const RunConfig& config,
                    const std::string& run_id);

}  // namespace mackrl

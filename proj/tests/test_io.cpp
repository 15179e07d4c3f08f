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

#include <filesystem>
#include <fstream>

#include "mackrl/config.hpp"
#include "mackrl/heads.hpp"

using namespace mackrl;

TEST_CASE("config json round-trip is the identity") {
  RunConfig cfg = gridworld_default_config();
  cfg.matrix.flip_p = 0.125;
  cfg.partition_subsample = 2;
  cfg.schedule.horizon = 1234;
  const nlohmann::json j1 = config_to_json(cfg);
  const RunConfig back = config_from_json(j1);
  CHECK(config_to_json(back) == j1);
}

TEST_CASE("config files round-trip through disk and reject unknown keys") {
  const auto path = std::filesystem::temp_directory_path() / "mackrl_cfg.json";
  RunConfig cfg = matrix_default_config();
  cfg.seed = 99;
  save_config(path.string(), cfg);
  const RunConfig back = load_config(path.string());
  CHECK(config_to_json(back) == config_to_json(cfg));
  std::filesystem::remove(path);

  nlohmann::json j = config_to_json(cfg);
  j["not_a_field"] = 1;
  CHECK_THROWS_AS(config_from_json(j), std::invalid_argument);
}

TEST_CASE("config parameters are settable by dotted name") {
  RunConfig cfg = matrix_default_config();
  set_config_param(cfg, "matrix.flip_p", "0.2");
  CHECK(cfg.matrix.flip_p == doctest::Approx(0.2));
  set_config_param(cfg, "partition_subsample", "3");
  CHECK(cfg.partition_subsample == 3);
  set_config_param(cfg, "algorithm", "iac");
  CHECK(cfg.algorithm == "iac");
  CHECK_THROWS_AS(set_config_param(cfg, "matrix.bogus", "1"), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Head a(HeadSpec{HeadKind::kLinear, 7, 4, 0});
  Head b(HeadSpec{HeadKind::kMlp, 5, 3, 8});
  Head c(HeadSpec{HeadKind::kGru, 4, 2, 6});
  RngStream rng = RngStream::from({61});
  a.init_params(rng, 1.3);
  b.init_params(rng, 0.9);
  c.init_params(rng, 0.4);

  const auto path = std::filesystem::temp_directory_path() / "mackrl_heads.ckpt";
  save_checkpoint(path.string(), {{"a", &a}, {"b", &b}, {"c", &c}}, 12345);
  const Checkpoint ck = load_checkpoint(path.string());
  std::filesystem::remove(path);

  REQUIRE(ck.heads.size() == 3);
  CHECK(ck.seed == 12345);
  CHECK(ck.heads[0].first == "a");
  CHECK(ck.heads[0].second.params() == a.params());
  CHECK(ck.heads[1].second.params() == b.params());
  CHECK(ck.heads[2].second.params() == c.params());
  CHECK(ck.heads[2].second.spec().hidden_dim == 6);
}

TEST_CASE("metric rows conform to the schema and refuse NaN") {
  const auto path = std::filesystem::temp_directory_path() / "mackrl_metrics.csv";
  {
    MetricsWriter w(path.string(), "runid", 7);
    w.add(100, "train", "batch_return", 0.5);
    w.add(200, "eval", "greedy_return", 0.875);
    CHECK_THROWS(w.add(300, "eval", "bad", std::nan("")));
    w.flush();
  }
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == MetricsWriter::kHeader);
  std::getline(f, line);
  CHECK(line == "runid,7,100,train,batch_return,0.5");
  std::getline(f, line);
  CHECK(line == "runid,7,200,eval,greedy_return,0.875");
  CHECK_FALSE(std::getline(f, line));
  std::filesystem::remove(path);
}

TEST_CASE("manifests tie outputs to a code version and config snapshot") {
  const auto dir = std::filesystem::temp_directory_path() / "mackrl_manifest";
  std::filesystem::create_directories(dir);
  const RunConfig cfg = matrix_default_config();
  write_manifest(dir.string(), cfg, make_run_id(cfg));
  std::ifstream f(dir / "manifest.json");
  nlohmann::json m;
  f >> m;
  CHECK_FALSE(m.at("code_version").get<std::string>().empty());
  CHECK(m.at("config") == config_to_json(cfg));
  CHECK(m.at("run_id").get<std::string>() == make_run_id(cfg));
  std::filesystem::remove_all(dir);
}

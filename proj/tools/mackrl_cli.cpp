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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mackrl/config.hpp"
#include "mackrl/oracle.hpp"
#include "mackrl/trainer.hpp"
#include "mackrl/verify.hpp"

namespace {

int worker_cap() {
  if (const char* env = std::getenv("CK_MACKRL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void run_jobs(std::vector<std::function<void()>> jobs) {
  const int workers = std::min<int>(worker_cap(), static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
}

int cmd_train(const std::string& config_path, std::uint64_t seed,
              const std::string& out_dir) {
  if (!std::filesystem::exists(config_path)) {
    std::cerr << "error: config file not found: " << config_path << "\n";
    return 2;
  }
  mackrl::RunConfig config;
  try {
    config = mackrl::load_config(config_path);
    config.seed = seed;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: bad config " << config_path << ": " << e.what() << "\n";
    return 2;
  }
  try {
    const mackrl::TrainResult result = mackrl::train_run(config, out_dir);
    std::cout << "final greedy return: " << result.final_greedy_return
              << "  (env steps: " << result.env_steps
              << ", restart: " << result.selected_restart << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: training failed: " << e.what() << "\n";
    return 3;
  }
}

int cmd_oracle(double ck_fraction, double flip_p) {
  if (ck_fraction < 0.0 || ck_fraction > 1.0) {
    std::cerr << "error: --ck-fraction must be in [0,1]\n";
    return 2;
  }
  mackrl::MatrixGameConfig cfg;
  cfg.ck_fraction = ck_fraction;
  cfg.flip_p = flip_p;
  try {
    const mackrl::MatrixOracleValues v = mackrl::matrix_oracle(cfg);
    std::cout << "matrix game oracle (ck_fraction=" << ck_fraction
              << ", p_ck=" << cfg.p_ck() << ", p_sigma=" << cfg.p_sigma() << ")\n";
    std::cout << "  IAC     " << v.iac << "\n";
    std::cout << "  CK-JAL  " << v.ck_jal << "\n";
    std::cout << "  JAL     " << v.jal << "\n";
    std::cout << "  MACKRL  " << v.mackrl << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_verify(const std::string& suite) {
  std::vector<mackrl::CheckResult> results;
  try {
    results = mackrl::verify_suite(suite);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
  }
  return mackrl::all_passed(results) ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, int seeds, const std::string& out_dir) {
  if (!std::filesystem::exists(config_path)) {
    std::cerr << "error: config file not found: " << config_path << "\n";
    return 2;
  }
  mackrl::RunConfig base;
  try {
    base = mackrl::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: bad config: " << e.what() << "\n";
    return 2;
  }
  std::vector<std::string> values;
  {
    std::stringstream ss(values_csv);
    std::string v;
    while (std::getline(ss, v, ',')) values.push_back(v);
  }
  if (values.empty()) {
    std::cerr << "error: empty --values list\n";
    return 2;
  }
  // Validate the parameter name up front.
  try {
    mackrl::RunConfig probe = base;
    mackrl::set_config_param(probe, param, values.front());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::filesystem::create_directories(out_dir);
  struct Point {
    std::string value;
    std::uint64_t seed;
    double final_return = NAN;
  };
  std::vector<Point> points;
  for (const auto& v : values)
    for (int s = 0; s < seeds; ++s)
      points.push_back({v, base.seed + static_cast<std::uint64_t>(s)});

  std::vector<std::function<void()>> jobs;
  std::mutex io_mutex;
  for (std::size_t i = 0; i < points.size(); ++i) {
    jobs.push_back([&, i] {
      Point& pt = points[i];
      mackrl::RunConfig cfg = base;
      mackrl::set_config_param(cfg, param, pt.value);
      cfg.seed = pt.seed;
      const std::string dir =
          (std::filesystem::path(out_dir) /
           (param + "=" + pt.value + "_seed" + std::to_string(pt.seed)))
              .string();
      const mackrl::TrainResult result = mackrl::train_run(cfg, dir);
      pt.final_return = result.final_greedy_return;
      std::lock_guard<std::mutex> lock(io_mutex);
      std::cout << param << "=" << pt.value << " seed=" << pt.seed << " -> "
                << result.final_greedy_return << "\n";
    });
  }
  try {
    run_jobs(std::move(jobs));
  } catch (const std::exception& e) {
    std::cerr << "error: sweep point failed: " << e.what() << "\n";
    return 3;
  }

  // Aggregate: mean and standard error per swept value.
  const std::string agg_path = (std::filesystem::path(out_dir) / "sweep.csv").string();
  std::ofstream agg(agg_path);
  agg << "param,value,n_seeds,mean_final_return,stderr_final_return\n";
  for (const auto& v : values) {
    std::vector<double> finals;
    for (const auto& pt : points)
      if (pt.value == v) finals.push_back(pt.final_return);
    double mean = 0.0;
    for (double x : finals) mean += x;
    mean /= static_cast<double>(finals.size());
    double var = 0.0;
    for (double x : finals) var += (x - mean) * (x - mean);
    const double stderr_v =
        finals.size() > 1 ? std::sqrt(var / (finals.size() - 1.0) / finals.size()) : 0.0;
    agg << param << ',' << v << ',' << finals.size() << ',' << mean << ',' << stderr_v
        << "\n";
  }
  std::cout << "wrote " << agg_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MACKRL: common-knowledge multi-agent RL experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", suite = "all";
  std::uint64_t seed = 1;
  double ck_fraction = 1.0, flip_p = 0.0;
  std::string param, values;
  int seeds = 5;
  std::string env = "matrix";

  auto* train = app.add_subcommand("train", "train one run per the config file");
  train->add_option("--config", config_path, "run config (JSON)")->required();
  train->add_option("--seed", seed, "run seed");
  train->add_option("--out", out_dir, "output directory");

  auto* oracle = app.add_subcommand("oracle", "print brute-force matrix-game optima");
  oracle->add_option("--env", env, "environment (matrix)");
  oracle->add_option("--ck-fraction", ck_fraction, "fraction of observations via the CK bit")
      ->required();
  oracle->add_option("--flip", flip_p, "CK bit flip probability");

  auto* verify = app.add_subcommand("verify", "run property suites");
  verify->add_option("--suite", suite, "ck|tree|sampling|gradients|envs|all");

  auto* sweep = app.add_subcommand("sweep", "train over a parameter grid");
  sweep->add_option("--config", config_path, "base run config (JSON)")->required();
  sweep->add_option("--param", param, "dotted config parameter name")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--seeds", seeds, "seeds per value");
  sweep->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return cmd_train(config_path, seed, out_dir);
  if (oracle->parsed()) {
    if (env != "matrix") {
      std::cerr << "error: oracle supports --env matrix only\n";
      return 2;
    }
    return cmd_oracle(ck_fraction, flip_p);
  }
  if (verify->parsed()) return cmd_verify(suite);
  if (sweep->parsed()) return cmd_sweep(config_path, param, values, seeds, out_dir);
  return 2;
}

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

// Property suites behind `mackrl verify` and the acceptance tests: random
// common-knowledge configurations, tree normalisation and sampler/marginal
// consistency, correlated-sampling bounds, finite-difference gradient
// checks, and environment calibration.

#pragma once

#include <string>
#include <vector>

namespace mackrl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> verify_ck(int configs = 200);
std::vector<CheckResult> verify_tree(int marginal_trees = 20);
std::vector<CheckResult> verify_sampling(int holenstein_pairs = 50);
std::vector<CheckResult> verify_gradients(int cases = 100);
std::vector<CheckResult> verify_envs();

// suite in {ck, tree, sampling, gradients, envs, all}; throws on others.
std::vector<CheckResult> verify_suite(const std::string& suite);

bool all_passed(const std::vector<CheckResult>& results);

// Upper critical value of the chi-square distribution (Wilson-Hilferty).
double chi_square_critical(int dof, double alpha);

}  // namespace mackrl

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

#include "mackrl/oracle.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>
#include <vector>

namespace mackrl {

namespace {

struct Outcome {
  double prob;
  GameId game;
  bool bit;
  int chan1, chan2;  // 0=A, 1=B, 2=none
};

std::vector<Outcome> outcome_distribution(const MatrixGameConfig& config) {
  const double p_ck = config.p_ck();
  const double p_sigma = config.p_sigma();
  std::vector<Outcome> out;
  for (int gi = 0; gi < 2; ++gi) {
    const GameId g = static_cast<GameId>(gi);
    if (p_ck > 0.0) out.push_back({0.5 * p_ck, g, true, gi, gi});
    const double pn = 0.5 * (1.0 - p_ck);
    if (pn <= 0.0) continue;
    const std::array<std::pair<int, double>, 2> draws = {
        std::make_pair(gi, p_sigma), std::make_pair(kGameChannelNone, 1.0 - p_sigma)};
    for (const auto& [c1, p1] : draws)
      for (const auto& [c2, p2] : draws)
        if (p1 * p2 > 0.0) out.push_back({pn * p1 * p2, g, false, c1, c2});
  }
  return out;
}

// Payoffs as doubles, indexed by game.
double payoff(GameId g, int u1, int u2) { return matrix_payoff(g, u1, u2); }

// Best fixed joint action against a {P(A), P(B)} posterior.
double best_joint_value(double pa, double pb) {
  double best = 0.0;
  for (int u1 = 0; u1 < kMatrixActions; ++u1)
    for (int u2 = 0; u2 < kMatrixActions; ++u2)
      best = std::max(best, pa * payoff(GameId::kA, u1, u2) + pb * payoff(GameId::kB, u1, u2));
  return best;
}

// Expected value of per-agent maps m1, m2 over {A, B, none} -> action.
double maps_value(const std::vector<Outcome>& dist, const std::array<int, 3>& m1,
                  const std::array<int, 3>& m2) {
  double v = 0.0;
  for (const auto& o : dist) v += o.prob * payoff(o.game, m1[o.chan1], m2[o.chan2]);
  return v;
}

template <typename Score>  // double(const array<int,3>& m1, const array<int,3>& m2)
double max_over_map_pairs(Score&& score) {
  double best = -1.0;
  std::array<int, 3> m1{}, m2{};
  for (m1[0] = 0; m1[0] < 5; ++m1[0])
    for (m1[1] = 0; m1[1] < 5; ++m1[1])
      for (m1[2] = 0; m1[2] < 5; ++m1[2])
        for (m2[0] = 0; m2[0] < 5; ++m2[0])
          for (m2[1] = 0; m2[1] < 5; ++m2[1])
            for (m2[2] = 0; m2[2] < 5; ++m2[2])
              best = std::max(best, score(m1, m2));
  return best;
}

}  // namespace

double matrix_no_bit_independent_optimum(const MatrixGameConfig& config) {
  // Outcome distribution conditioned on the bit being unset.
  const double p_sigma = config.p_sigma();
  std::vector<Outcome> dist;
  for (int gi = 0; gi < 2; ++gi) {
    const GameId g = static_cast<GameId>(gi);
    const std::array<std::pair<int, double>, 2> draws = {
        std::make_pair(gi, p_sigma), std::make_pair(kGameChannelNone, 1.0 - p_sigma)};
    for (const auto& [c1, p1] : draws)
      for (const auto& [c2, p2] : draws)
        if (p1 * p2 > 0.0) dist.push_back({0.5 * p1 * p2, g, false, c1, c2});
  }
  return max_over_map_pairs(
      [&](const auto& m1, const auto& m2) { return maps_value(dist, m1, m2); });
}

MatrixOracleValues matrix_oracle(const MatrixGameConfig& config) {
  if (config.flip_p != 0.0)
    throw std::invalid_argument("matrix_oracle: defined for flip_p == 0 only");
  const double p_ck = config.p_ck();
  const std::vector<Outcome> dist = outcome_distribution(config);
  MatrixOracleValues values;

  // IAC: exhaustive over joint profiles of per-agent observation maps.
  values.iac = max_over_map_pairs(
      [&](const auto& m1, const auto& m2) { return maps_value(dist, m1, m2); });

  // JAL: per joint observation, the best joint action under the posterior.
  std::map<std::tuple<bool, int, int>, std::array<double, 2>> posterior;
  for (const auto& o : dist)
    posterior[{o.bit, o.chan1, o.chan2}][static_cast<int>(o.game)] += o.prob;
  values.jal = 0.0;
  for (const auto& [key, pg] : posterior) values.jal += best_joint_value(pg[0], pg[1]);

  // CK-JAL: CK states (bit, A), (bit, B) and no-bit.
  const double no_bit_joint = best_joint_value(0.5, 0.5);
  values.ck_jal = p_ck * 0.5 * (best_joint_value(1.0, 0.0) + best_joint_value(0.0, 1.0)) +
                  (1.0 - p_ck) * no_bit_joint;

  // MACKRL: under a set bit the pair controller reaches each game's maximum
  // (joint action or delegation are both available); under no bit it takes
  // the better of the best fixed joint action and the best delegation to
  // independent maps.
  const double delegate_opt = matrix_no_bit_independent_optimum(config);
  values.mackrl = p_ck * 0.5 * (best_joint_value(1.0, 0.0) + best_joint_value(0.0, 1.0)) +
                  (1.0 - p_ck) * std::max(no_bit_joint, delegate_opt);
  return values;
}

}  // namespace mackrl

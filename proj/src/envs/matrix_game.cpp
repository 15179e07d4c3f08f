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

#include "mackrl/envs/matrix_game.hpp"

#include <algorithm>
#include <stdexcept>

namespace mackrl {

namespace {

constexpr std::array<std::array<int, 5>, 5> kTableA = {{
    {5, 0, 0, 2, 0},
    {0, 1, 2, 4, 2},
    {0, 0, 0, 2, 0},
    {0, 0, 0, 1, 0},
    {0, 0, 0, 0, 5},
}};

constexpr std::array<std::array<int, 5>, 5> kTableB = {{
    {0, 0, 1, 0, 5},
    {0, 0, 2, 0, 0},
    {1, 2, 4, 2, 1},
    {0, 0, 2, 0, 0},
    {5, 0, 1, 0, 0},
}};

}  // namespace

const std::array<std::array<int, kMatrixActions>, kMatrixActions>& payoff_table(GameId game) {
  return game == GameId::kA ? kTableA : kTableB;
}

double matrix_payoff(GameId game, int u1, int u2) {
  if (u1 < 0 || u1 >= kMatrixActions || u2 < 0 || u2 >= kMatrixActions)
    throw std::out_of_range("matrix_payoff: action out of range");
  return payoff_table(game)[u1][u2] / 5.0;
}

MatrixState matrix_reset(const MatrixGameConfig& config, RngStream& rng) {
  // Fixed draw order: game, bit, two private draws, two flips.
  MatrixState s;
  s.game = rng.next_bernoulli(0.5) ? GameId::kB : GameId::kA;
  s.ck_bit = rng.next_bernoulli(config.p_ck());
  const int gi = static_cast<int>(s.game);
  const bool priv1 = rng.next_bernoulli(config.p_sigma());
  const bool priv2 = rng.next_bernoulli(config.p_sigma());
  const bool flip1 = rng.next_bernoulli(config.flip_p);
  const bool flip2 = rng.next_bernoulli(config.flip_p);
  s.obs[0].game_channel = s.ck_bit ? gi : (priv1 ? gi : kGameChannelNone);
  s.obs[1].game_channel = s.ck_bit ? gi : (priv2 ? gi : kGameChannelNone);
  s.obs[0].ck_bit = s.ck_bit ^ flip1;
  s.obs[1].ck_bit = s.ck_bit ^ flip2;
  return s;
}

double matrix_step(const MatrixState& state, int u1, int u2) {
  return matrix_payoff(state.game, u1, u2);
}

void encode_matrix_ck(bool ck_bit, int game_channel, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = ck_bit ? 1.0 : 0.0;
  if (ck_bit && game_channel == 0) out[1] = 1.0;
  if (ck_bit && game_channel == 1) out[2] = 1.0;
}

void encode_matrix_obs(const MatrixObservation& obs, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = obs.ck_bit ? 1.0 : 0.0;
  if (obs.game_channel == 0) out[1] = 1.0;
  if (obs.game_channel == 1) out[2] = 1.0;
}

}  // namespace mackrl

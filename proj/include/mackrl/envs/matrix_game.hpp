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

// Single-step two-agent matrix game with a common-knowledge bit.
//
// A fair coin picks one of two 5x5 payoff tables. With probability p_ck an
// observable CK bit is set and both agents learn the game through it; when
// unset, each agent independently observes the game with probability
// p_sigma and nothing otherwise. p_sigma is calibrated so the per-agent
// observation rate stays at 75% while the fraction of observations carried
// by the bit sweeps from 0 to 1. Each agent's view of the bit can be
// flipped independently with probability flip_p (the game channel itself is
// never corrupted: it carries the true game iff the true bit is set, and
// the private draw otherwise).

#pragma once

#include <array>
#include <span>
#include <utility>

#include "mackrl/rng.hpp"

namespace mackrl {

inline constexpr int kMatrixActions = 5;
inline constexpr double kMatrixObservationRate = 0.75;

enum class GameId { kA = 0, kB = 1 };

// Raw integer payoff entries; the reward is entry / 5.
const std::array<std::array<int, kMatrixActions>, kMatrixActions>& payoff_table(GameId game);

// entry / 5. Throws std::out_of_range for actions outside [0, 5).
double matrix_payoff(GameId game, int u1, int u2);

struct MatrixGameConfig {
  double ck_fraction = 1.0;  // fraction of observations carried by the bit
  double flip_p = 0.0;       // per-agent bit flip probability

  double p_ck() const { return kMatrixObservationRate * ck_fraction; }
  double p_sigma() const {
    const double pc = p_ck();
    return pc >= 1.0 ? 0.0 : (kMatrixObservationRate - pc) / (1.0 - pc);
  }
};

inline constexpr int kGameChannelNone = 2;  // game channel: 0=A, 1=B, 2=none

struct MatrixObservation {
  bool ck_bit = false;            // possibly flipped
  int game_channel = kGameChannelNone;
};

struct MatrixState {
  GameId game = GameId::kA;
  bool ck_bit = false;            // true bit
  std::array<MatrixObservation, 2> obs;
};

MatrixState matrix_reset(const MatrixGameConfig& config, RngStream& rng);

// Terminal single-step reward. Throws std::out_of_range on bad actions.
double matrix_step(const MatrixState& state, int u1, int u2);

// Input encodings used by the policy heads (3 dims each).
inline constexpr int kMatrixCkInputDim = 3;   // [ck flag, game A, game B]
inline constexpr int kMatrixObsInputDim = 3;  // [bit, sigma A, sigma B]

void encode_matrix_ck(bool ck_bit, int game_channel, std::span<double> out);
void encode_matrix_obs(const MatrixObservation& obs, std::span<double> out);

// Enumerates the joint outcome distribution (flips included) and returns the
// exact expected reward of a deterministic centralised decision rule.
template <typename JointDecideFn>  // pair<int,int>(const MatrixObservation&, const MatrixObservation&)
double matrix_exact_return_joint(const MatrixGameConfig& config, JointDecideFn&& decide) {
  const double p_ck = config.p_ck();
  const double p_sigma = config.p_sigma();
  double total = 0.0;
  for (int gi = 0; gi < 2; ++gi) {
    const GameId game = static_cast<GameId>(gi);
    for (int bit = 0; bit < 2; ++bit) {
      const double pb = bit ? p_ck : 1.0 - p_ck;
      if (pb <= 0.0) continue;
      // game channel outcomes per agent
      const int options = bit ? 1 : 2;
      for (int c1 = 0; c1 < options; ++c1) {
        for (int c2 = 0; c2 < options; ++c2) {
          double pc = 1.0;
          int chan1 = gi, chan2 = gi;
          if (!bit) {
            pc *= c1 == 0 ? p_sigma : 1.0 - p_sigma;
            pc *= c2 == 0 ? p_sigma : 1.0 - p_sigma;
            chan1 = c1 == 0 ? gi : kGameChannelNone;
            chan2 = c2 == 0 ? gi : kGameChannelNone;
          }
          if (pc <= 0.0) continue;
          for (int f1 = 0; f1 < 2; ++f1) {
            for (int f2 = 0; f2 < 2; ++f2) {
              const double pf = (f1 ? config.flip_p : 1.0 - config.flip_p) *
                                (f2 ? config.flip_p : 1.0 - config.flip_p);
              if (pf <= 0.0) continue;
              const MatrixObservation o1{static_cast<bool>(bit ^ f1), chan1};
              const MatrixObservation o2{static_cast<bool>(bit ^ f2), chan2};
              const auto [u1, u2] = decide(o1, o2);
              total += 0.5 * pb * pc * pf * matrix_payoff(game, u1, u2);
            }
          }
        }
      }
    }
  }
  return total;
}

// Per-agent (decentralised) variant: decide(agent, obs) -> action.
template <typename DecideFn>  // int(int agent, const MatrixObservation&)
double matrix_exact_return(const MatrixGameConfig& config, DecideFn&& decide) {
  return matrix_exact_return_joint(
      config, [&](const MatrixObservation& o1, const MatrixObservation& o2) {
        return std::pair<int, int>(decide(0, o1), decide(1, o2));
      });
}

}  // namespace mackrl

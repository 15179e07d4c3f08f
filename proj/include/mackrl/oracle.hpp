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

// Brute-force optima of the matrix game for four policy classes, by
// exhaustive search over deterministic policies:
//   IAC     per-agent maps {A, B, none} -> action, maximised jointly;
//   JAL     joint-observation -> joint action (centralised);
//   CK-JAL  CK state {(bit,A), (bit,B), no-bit} -> joint action;
//   MACKRL  CK state -> (joint action | delegate) x independent maps.

#pragma once

#include "mackrl/envs/matrix_game.hpp"

namespace mackrl {

struct MatrixOracleValues {
  double iac = 0.0;
  double ck_jal = 0.0;
  double jal = 0.0;
  double mackrl = 0.0;
};

// Requires flip_p == 0 (throws otherwise).
MatrixOracleValues matrix_oracle(const MatrixGameConfig& config);

// Optimum of the delegate branch alone: best independent maps given no bit.
double matrix_no_bit_independent_optimum(const MatrixGameConfig& config);

}  // namespace mackrl

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

// Small differentiable function heads with flat parameter vectors and exact
// analytic gradients: linear, one-hidden-layer tanh MLP, and a minimal gated
// recurrent cell (standard GRU equations, single step). Gradients are
// verified against central finite differences in the test suite.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mackrl/rng.hpp"

namespace mackrl {

enum class HeadKind { kLinear, kMlp, kGru };

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& s);

struct HeadSpec {
  HeadKind kind = HeadKind::kLinear;
  int input_dim = 0;
  int output_dim = 0;
  int hidden_dim = 0;  // mlp/gru only

  int param_count() const;
};

class Head {
 public:
  explicit Head(HeadSpec spec);

  const HeadSpec& spec() const { return spec_; }
  int param_count() const { return static_cast<int>(params_.size()); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Weights ~ N(0, scale), biases zero.
  void init_params(RngStream& rng, double scale);
  // Multiplies the weight columns for input positions [begin, end) by
  // `factor` (all gates for the recurrent cell). Used to give index one-hot
  // inputs a different init scale than observation inputs.
  void rescale_input_columns(int begin, int end, double factor);

  // hidden_in/hidden_out are only read/written by the recurrent kind and may
  // be empty otherwise. Throws on shape mismatch.
  void forward(std::span<const double> input, std::span<const double> hidden_in,
               std::span<double> output, std::span<double> hidden_out) const;

  // Convenience for non-recurrent heads (zero hidden state for the GRU).
  std::vector<double> forward_logits(std::span<const double> input) const;

  // Adds d(output . cotangent)/dtheta into grad (size param_count), with
  // input and hidden_in held fixed.
  void accumulate_grad(std::span<const double> input, std::span<const double> hidden_in,
                       std::span<const double> cotangent, std::span<double> grad) const;

 private:
  HeadSpec spec_;
  std::vector<double> params_;
};

// --- distributions over logits -------------------------------------------

std::vector<double> softmax(std::span<const double> logits);

// (1-eps) * softmax(logits) + eps * uniform.
std::vector<double> bounded_softmax(std::span<const double> logits, double eps);

// Draws one uniform from `rng` and inverse-CDF samples the bounded softmax.
int bounded_softmax_sample(std::span<const double> logits, double eps, RngStream& rng);

// Argmax with ties broken toward the lowest index.
int argmax_lowest(std::span<const double> values);

// Given an adjoint w on the bounded-softmax probabilities, writes the
// cotangent on the logits: (1-eps) * s_v * (w_v - sum_u w_u s_u).
void bounded_softmax_backward(std::span<const double> softmax_probs,
                              std::span<const double> dist_adjoint, double eps,
                              std::span<double> logit_cotangent);

// --- optimiser -------------------------------------------------------------

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg);

// --- exploration ------------------------------------------------------------

struct ExplorationSchedule {
  double eps_start = 0.5;
  double eps_end = 0.01;
  long horizon = 50000;  // env steps

  double at(long env_steps) const;
};

// --- checkpoints -------------------------------------------------------------

// Flat binary parameter blob with a JSON header (names, architectures,
// shapes, seed). Round-trips bit-exactly.
struct NamedHead {
  std::string name;
  const Head* head;
};

void save_checkpoint(const std::string& path, const std::vector<NamedHead>& heads,
                     std::uint64_t seed);

struct Checkpoint {
  std::vector<std::pair<std::string, Head>> heads;
  std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace mackrl

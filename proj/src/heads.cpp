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

#include "mackrl/heads.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mackrl {

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::kLinear: return "linear";
    case HeadKind::kMlp: return "mlp";
    case HeadKind::kGru: return "gru";
  }
  return "?";
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "linear") return HeadKind::kLinear;
  if (s == "mlp") return HeadKind::kMlp;
  if (s == "gru") return HeadKind::kGru;
  throw std::invalid_argument("unknown head kind: " + s);
}

int HeadSpec::param_count() const {
  switch (kind) {
    case HeadKind::kLinear:
      return output_dim * (input_dim + 1);
    case HeadKind::kMlp:
      return hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
    case HeadKind::kGru:
      return 3 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim) +
             output_dim * hidden_dim + output_dim;
  }
  return 0;
}

Head::Head(HeadSpec spec) : spec_(spec), params_(spec.param_count(), 0.0) {
  if (spec_.input_dim <= 0 || spec_.output_dim <= 0)
    throw std::invalid_argument("Head: dims must be positive");
  if (spec_.kind != HeadKind::kLinear && spec_.hidden_dim <= 0)
    throw std::invalid_argument("Head: hidden_dim required");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y += W x where W is rows x cols, row-major at base.
void matvec_acc(const double* W, int rows, int cols, std::span<const double> x,
                double* y) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = W + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// grad_W += outer(cot, x); grad_b += cot.
void linear_grad(double* gW, double* gb, int rows, int cols,
                 std::span<const double> x, const double* cot) {
  for (int r = 0; r < rows; ++r) {
    double* row = gW + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) row[c] += cot[r] * x[c];
    gb[r] += cot[r];
  }
}

// x += W^T cot.
void matvec_t_acc(const double* W, int rows, int cols, const double* cot, double* x) {
  for (int r = 0; r < rows; ++r) {
    const double* row = W + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) x[c] += row[c] * cot[r];
  }
}

}  // namespace

void Head::init_params(RngStream& rng, double scale) {
  std::fill(params_.begin(), params_.end(), 0.0);
  const int in = spec_.input_dim, out = spec_.output_dim, h = spec_.hidden_dim;
  auto fill_weights = [&](double* w, int n) {
    for (int i = 0; i < n; ++i) w[i] = rng.next_normal() * scale;
  };
  double* p = params_.data();
  switch (spec_.kind) {
    case HeadKind::kLinear:
      fill_weights(p, out * in);  // bias stays zero
      break;
    case HeadKind::kMlp:
      fill_weights(p, h * in);
      fill_weights(p + h * in + h, out * h);
      break;
    case HeadKind::kGru: {
      const int gate = h * in + h * h + h;
      for (int g = 0; g < 3; ++g) fill_weights(p + g * gate, h * in + h * h);
      fill_weights(p + 3 * gate, out * h);
      break;
    }
  }
}

void Head::rescale_input_columns(int begin, int end, double factor) {
  const int in = spec_.input_dim, out = spec_.output_dim, h = spec_.hidden_dim;
  auto scale_block = [&](double* W, int rows) {
    for (int r = 0; r < rows; ++r)
      for (int c = begin; c < end; ++c) W[r * in + c] *= factor;
  };
  double* p = params_.data();
  switch (spec_.kind) {
    case HeadKind::kLinear:
      scale_block(p, out);
      break;
    case HeadKind::kMlp:
      scale_block(p, h);
      break;
    case HeadKind::kGru: {
      const int gate = h * in + h * h + h;
      for (int g = 0; g < 3; ++g) scale_block(p + g * gate, h);
      break;
    }
  }
}

void Head::forward(std::span<const double> input, std::span<const double> hidden_in,
                   std::span<double> output, std::span<double> hidden_out) const {
  const int in = spec_.input_dim, out = spec_.output_dim, h = spec_.hidden_dim;
  if (static_cast<int>(input.size()) != in)
    throw std::invalid_argument("Head::forward: input size mismatch");
  if (static_cast<int>(output.size()) != out)
    throw std::invalid_argument("Head::forward: output size mismatch");
  const double* p = params_.data();

  switch (spec_.kind) {
    case HeadKind::kLinear: {
      const double* W = p;
      const double* b = p + out * in;
      for (int r = 0; r < out; ++r) output[r] = b[r];
      matvec_acc(W, out, in, input, output.data());
      return;
    }
    case HeadKind::kMlp: {
      const double* W1 = p;
      const double* b1 = p + h * in;
      const double* W2 = b1 + h;
      const double* b2 = W2 + out * h;
      std::vector<double> hid(h);
      for (int r = 0; r < h; ++r) hid[r] = b1[r];
      matvec_acc(W1, h, in, input, hid.data());
      for (int r = 0; r < h; ++r) hid[r] = std::tanh(hid[r]);
      for (int r = 0; r < out; ++r) output[r] = b2[r];
      matvec_acc(W2, out, h, hid, output.data());
      return;
    }
    case HeadKind::kGru: {
      if (static_cast<int>(hidden_in.size()) != h || static_cast<int>(hidden_out.size()) != h)
        throw std::invalid_argument("Head::forward: hidden size mismatch");
      const int gate = h * in + h * h + h;
      auto gate_pre = [&](int g, std::span<const double> hmul, std::vector<double>& pre) {
        const double* W = p + g * gate;
        const double* U = W + h * in;
        const double* b = U + h * h;
        pre.assign(b, b + h);
        matvec_acc(W, h, in, input, pre.data());
        matvec_acc(U, h, h, hmul, pre.data());
      };
      std::vector<double> z(h), r(h), c(h), rh(h);
      gate_pre(0, hidden_in, z);
      gate_pre(1, hidden_in, r);
      for (int i = 0; i < h; ++i) {
        z[i] = sigmoid(z[i]);
        r[i] = sigmoid(r[i]);
        rh[i] = r[i] * hidden_in[i];
      }
      gate_pre(2, rh, c);
      for (int i = 0; i < h; ++i) {
        c[i] = std::tanh(c[i]);
        hidden_out[i] = (1.0 - z[i]) * hidden_in[i] + z[i] * c[i];
      }
      const double* Wo = p + 3 * gate;
      const double* bo = Wo + out * h;
      for (int i = 0; i < out; ++i) output[i] = bo[i];
      matvec_acc(Wo, out, h, hidden_out, output.data());
      return;
    }
  }
}

std::vector<double> Head::forward_logits(std::span<const double> input) const {
  std::vector<double> out(spec_.output_dim);
  std::vector<double> h0(spec_.kind == HeadKind::kGru ? spec_.hidden_dim : 0, 0.0);
  std::vector<double> h1(h0.size(), 0.0);
  forward(input, h0, out, h1);
  return out;
}

void Head::accumulate_grad(std::span<const double> input, std::span<const double> hidden_in,
                           std::span<const double> cotangent, std::span<double> grad) const {
  const int in = spec_.input_dim, out = spec_.output_dim, h = spec_.hidden_dim;
  if (static_cast<int>(grad.size()) != param_count())
    throw std::invalid_argument("Head::accumulate_grad: grad size mismatch");
  const double* p = params_.data();
  double* g = grad.data();

  switch (spec_.kind) {
    case HeadKind::kLinear: {
      linear_grad(g, g + out * in, out, in, input, cotangent.data());
      return;
    }
    case HeadKind::kMlp: {
      const double* W1 = p;
      const double* b1 = p + h * in;
      const double* W2 = b1 + h;
      std::vector<double> pre(h);
      for (int r = 0; r < h; ++r) pre[r] = b1[r];
      matvec_acc(W1, h, in, input, pre.data());
      std::vector<double> hid(h);
      for (int r = 0; r < h; ++r) hid[r] = std::tanh(pre[r]);

      double* gW1 = g;
      double* gb1 = g + h * in;
      double* gW2 = gb1 + h;
      double* gb2 = gW2 + out * h;
      linear_grad(gW2, gb2, out, h, hid, cotangent.data());
      std::vector<double> dh(h, 0.0);
      matvec_t_acc(W2, out, h, cotangent.data(), dh.data());
      for (int r = 0; r < h; ++r) dh[r] *= 1.0 - hid[r] * hid[r];
      linear_grad(gW1, gb1, h, in, input, dh.data());
      return;
    }
    case HeadKind::kGru: {
      const int gate = h * in + h * h + h;
      auto gate_pre = [&](int gi, std::span<const double> hmul, std::vector<double>& pre) {
        const double* W = p + gi * gate;
        const double* U = W + h * in;
        const double* b = U + h * h;
        pre.assign(b, b + h);
        matvec_acc(W, h, in, input, pre.data());
        matvec_acc(U, h, h, hmul, pre.data());
      };
      std::vector<double> z(h), r(h), c(h), rh(h), hnew(h);
      gate_pre(0, hidden_in, z);
      gate_pre(1, hidden_in, r);
      for (int i = 0; i < h; ++i) {
        z[i] = sigmoid(z[i]);
        r[i] = sigmoid(r[i]);
        rh[i] = r[i] * hidden_in[i];
      }
      gate_pre(2, rh, c);
      for (int i = 0; i < h; ++i) {
        c[i] = std::tanh(c[i]);
        hnew[i] = (1.0 - z[i]) * hidden_in[i] + z[i] * c[i];
      }

      const double* Wo = p + 3 * gate;
      double* gWo = g + 3 * gate;
      double* gbo = gWo + out * h;
      linear_grad(gWo, gbo, out, h, hnew, cotangent.data());
      std::vector<double> dh(h, 0.0);
      matvec_t_acc(Wo, out, h, cotangent.data(), dh.data());

      std::vector<double> dz(h), dc(h);
      for (int i = 0; i < h; ++i) {
        dz[i] = dh[i] * (c[i] - hidden_in[i]) * z[i] * (1.0 - z[i]);
        dc[i] = dh[i] * z[i] * (1.0 - c[i] * c[i]);
      }
      // candidate gate params + backprop into r through Uc
      {
        const double* Uc = p + 2 * gate + h * in;
        double* gWc = g + 2 * gate;
        double* gUc = gWc + h * in;
        double* gbc = gUc + h * h;
        linear_grad(gWc, gbc, h, in, input, dc.data());
        // gUc += outer(dc, rh)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < h; ++j) gUc[i * h + j] += dc[i] * rh[j];
        std::vector<double> drh(h, 0.0);
        matvec_t_acc(Uc, h, h, dc.data(), drh.data());
        std::vector<double> dr(h);
        for (int i = 0; i < h; ++i) dr[i] = drh[i] * hidden_in[i] * r[i] * (1.0 - r[i]);
        double* gWr = g + 1 * gate;
        double* gUr = gWr + h * in;
        double* gbr = gUr + h * h;
        linear_grad(gWr, gbr, h, in, input, dr.data());
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < h; ++j) gUr[i * h + j] += dr[i] * hidden_in[j];
      }
      {
        double* gWz = g;
        double* gUz = gWz + h * in;
        double* gbz = gUz + h * h;
        linear_grad(gWz, gbz, h, in, input, dz.data());
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < h; ++j) gUz[i * h + j] += dz[i] * hidden_in[j];
      }
      return;
    }
  }
}

// --- distributions ----------------------------------------------------------

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> bounded_softmax(std::span<const double> logits, double eps) {
  std::vector<double> out = softmax(logits);
  const double u = eps / static_cast<double>(out.size());
  for (double& v : out) v = (1.0 - eps) * v + u;
  return out;
}

int bounded_softmax_sample(std::span<const double> logits, double eps, RngStream& rng) {
  const std::vector<double> dist = bounded_softmax(logits, eps);
  const double u = rng.next_double();
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size()) - 1;
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

void bounded_softmax_backward(std::span<const double> softmax_probs,
                              std::span<const double> dist_adjoint, double eps,
                              std::span<double> logit_cotangent) {
  double inner = 0.0;
  for (std::size_t i = 0; i < softmax_probs.size(); ++i)
    inner += dist_adjoint[i] * softmax_probs[i];
  for (std::size_t i = 0; i < softmax_probs.size(); ++i)
    logit_cotangent[i] = (1.0 - eps) * softmax_probs[i] * (dist_adjoint[i] - inner);
}

// --- optimiser ----------------------------------------------------------------

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (state.m.size() != params.size()) state = AdamState(params.size());
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mh = state.m[i] / bc1;
    const double vh = state.v[i] / bc2;
    params[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
  }
}

double ExplorationSchedule::at(long env_steps) const {
  if (horizon <= 0 || env_steps >= horizon) return eps_end;
  if (env_steps <= 0) return eps_start;
  const double f = static_cast<double>(env_steps) / static_cast<double>(horizon);
  return eps_start + (eps_end - eps_start) * f;
}

// --- checkpoints ----------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'M', 'K', 'R', 'L'};
}

void save_checkpoint(const std::string& path, const std::vector<NamedHead>& heads,
                     std::uint64_t seed) {
  nlohmann::json header;
  header["seed"] = seed;
  header["heads"] = nlohmann::json::array();
  for (const auto& nh : heads) {
    const HeadSpec& s = nh.head->spec();
    header["heads"].push_back({{"name", nh.name},
                               {"kind", to_string(s.kind)},
                               {"input_dim", s.input_dim},
                               {"output_dim", s.output_dim},
                               {"hidden_dim", s.hidden_dim},
                               {"param_count", nh.head->param_count()}});
  }
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& nh : heads) {
    const auto& p = nh.head->params();
    f.write(reinterpret_cast<const char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  f.read(hs.data(), len);
  const nlohmann::json header = nlohmann::json::parse(hs);

  Checkpoint ck;
  ck.seed = header.at("seed").get<std::uint64_t>();
  for (const auto& jh : header.at("heads")) {
    HeadSpec spec;
    spec.kind = head_kind_from_string(jh.at("kind").get<std::string>());
    spec.input_dim = jh.at("input_dim").get<int>();
    spec.output_dim = jh.at("output_dim").get<int>();
    spec.hidden_dim = jh.at("hidden_dim").get<int>();
    Head head(spec);
    if (head.param_count() != jh.at("param_count").get<int>())
      throw std::runtime_error("checkpoint param count mismatch");
    f.read(reinterpret_cast<char*>(head.params().data()),
           static_cast<std::streamsize>(head.params().size() * sizeof(double)));
    ck.heads.emplace_back(jh.at("name").get<std::string>(), std::move(head));
  }
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  return ck;
}

}  // namespace mackrl

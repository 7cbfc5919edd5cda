// Copyright 2026 The MASP Authors. All rights reserved.
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

#include "masp/neuralcore.h"

#include <algorithm>
#include <cmath>

#include "masp/errors.h"
#include "masp/rng.h"

namespace masp {

DenseLayer::DenseLayer(int in, int out)
    : in_dim(in), out_dim(out), weights(in * out, 0.0), bias(out, 0.0) {
  MASP_CHECK(in >= 1 && out >= 1, "dense layer dims must be positive");
}

void DenseLayer::InitUniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& x : weights) x = rng.Uniform(-bound, bound);
  std::fill(bias.begin(), bias.end(), 0.0);
}

void DenseLayer::SetZero() {
  std::fill(weights.begin(), weights.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
}

void DenseLayer::AppendParams(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weights", weights});
  out.push_back({prefix + ".bias", bias});
}

Vec DenseForward(const DenseLayer& layer, std::span<const double> x,
                 Activation activation, DenseRecord* record) {
  MASP_CHECK_EQ(static_cast<int>(x.size()), layer.in_dim, "dense input dim");
  Vec y(layer.out_dim);
  for (int r = 0; r < layer.out_dim; ++r) {
    const double* row = layer.weights.data() + r * layer.in_dim;
    double acc = layer.bias[r];
    for (int c = 0; c < layer.in_dim; ++c) acc += row[c] * x[c];
    if (activation == Activation::kRelu && acc < 0.0) acc = 0.0;
    y[r] = acc;
  }
  if (record != nullptr) {
    record->input.assign(x.begin(), x.end());
    record->output = y;
    record->activation = activation;
  }
  return y;
}

Vec DenseBackward(const DenseLayer& layer, const DenseRecord& record,
                  std::span<const double> grad_output, DenseLayer& grads) {
  MASP_CHECK_EQ(static_cast<int>(grad_output.size()), layer.out_dim,
                "dense grad dim");
  Vec dx(layer.in_dim, 0.0);
  for (int r = 0; r < layer.out_dim; ++r) {
    double d = grad_output[r];
    if (record.activation == Activation::kRelu && record.output[r] <= 0.0) {
      d = 0.0;
    }
    if (d == 0.0) continue;
    const double* row = layer.weights.data() + r * layer.in_dim;
    double* grow = grads.weights.data() + r * layer.in_dim;
    for (int c = 0; c < layer.in_dim; ++c) {
      grow[c] += d * record.input[c];
      dx[c] += d * row[c];
    }
    grads.bias[r] += d;
  }
  return dx;
}

Vec Softmax(std::span<const double> logits) {
  MASP_CHECK(!logits.empty(), "softmax of empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LstmCellParams::LstmCellParams(int x, int h)
    : x_dim(x),
      h_dim(h),
      w(4 * h * x, 0.0),
      u(4 * h * h, 0.0),
      b(4 * h, 0.0) {
  MASP_CHECK(x >= 1 && h >= 1, "lstm dims must be positive");
}

void LstmCellParams::InitUniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(h_dim));
  for (double& v : w) v = rng.Uniform(-bound, bound);
  for (double& v : u) v = rng.Uniform(-bound, bound);
  std::fill(b.begin(), b.end(), 0.0);
}

void LstmCellParams::SetZero() {
  std::fill(w.begin(), w.end(), 0.0);
  std::fill(u.begin(), u.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

void LstmCellParams::AppendParams(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".w", w});
  out.push_back({prefix + ".u", u});
  out.push_back({prefix + ".b", b});
}

LstmOutput LstmCell(const LstmCellParams& params, std::span<const double> x,
                    std::span<const double> h, std::span<const double> c,
                    LstmRecord* record) {
  const int xd = params.x_dim;
  const int hd = params.h_dim;
  MASP_CHECK_EQ(static_cast<int>(x.size()), xd, "lstm input dim");
  MASP_CHECK_EQ(static_cast<int>(h.size()), hd, "lstm hidden dim");
  MASP_CHECK_EQ(static_cast<int>(c.size()), hd, "lstm cell dim");

  Vec pre(4 * hd);
  for (int r = 0; r < 4 * hd; ++r) {
    double acc = params.b[r];
    const double* wr = params.w.data() + r * xd;
    const double* ur = params.u.data() + r * hd;
    for (int k = 0; k < xd; ++k) acc += wr[k] * x[k];
    for (int k = 0; k < hd; ++k) acc += ur[k] * h[k];
    pre[r] = acc;
  }
  Vec gi(hd), gf(hd), go(hd), gg(hd);
  LstmOutput out{Vec(hd), Vec(hd)};
  Vec tanh_c(hd);
  for (int k = 0; k < hd; ++k) {
    gi[k] = Sigmoid(pre[k]);
    gf[k] = Sigmoid(pre[hd + k]);
    go[k] = Sigmoid(pre[2 * hd + k]);
    gg[k] = std::tanh(pre[3 * hd + k]);
    out.c[k] = gf[k] * c[k] + gi[k] * gg[k];
    tanh_c[k] = std::tanh(out.c[k]);
    out.h[k] = go[k] * tanh_c[k];
  }
  if (record != nullptr) {
    record->x.assign(x.begin(), x.end());
    record->h.assign(h.begin(), h.end());
    record->c.assign(c.begin(), c.end());
    record->i = std::move(gi);
    record->f = std::move(gf);
    record->o = std::move(go);
    record->g = std::move(gg);
    record->c_next = out.c;
    record->tanh_c_next = std::move(tanh_c);
  }
  return out;
}

LstmInputGrads LstmBackward(const LstmCellParams& params,
                            const LstmRecord& record,
                            std::span<const double> grad_h_next,
                            std::span<const double> grad_c_next,
                            LstmCellParams& grads) {
  const int xd = params.x_dim;
  const int hd = params.h_dim;
  MASP_CHECK_EQ(static_cast<int>(grad_h_next.size()), hd, "lstm grad h dim");
  MASP_CHECK_EQ(static_cast<int>(grad_c_next.size()), hd, "lstm grad c dim");

  LstmInputGrads in{Vec(xd, 0.0), Vec(hd, 0.0), Vec(hd, 0.0)};
  Vec dpre(4 * hd);
  for (int k = 0; k < hd; ++k) {
    const double tc = record.tanh_c_next[k];
    const double d_o = grad_h_next[k] * tc;
    const double dc =
        grad_c_next[k] + grad_h_next[k] * record.o[k] * (1.0 - tc * tc);
    const double d_i = dc * record.g[k];
    const double d_f = dc * record.c[k];
    const double d_g = dc * record.i[k];
    in.c[k] = dc * record.f[k];
    dpre[k] = d_i * record.i[k] * (1.0 - record.i[k]);
    dpre[hd + k] = d_f * record.f[k] * (1.0 - record.f[k]);
    dpre[2 * hd + k] = d_o * record.o[k] * (1.0 - record.o[k]);
    dpre[3 * hd + k] = d_g * (1.0 - record.g[k] * record.g[k]);
  }
  for (int r = 0; r < 4 * hd; ++r) {
    const double d = dpre[r];
    if (d == 0.0) continue;
    const double* wr = params.w.data() + r * xd;
    const double* ur = params.u.data() + r * hd;
    double* gw = grads.w.data() + r * xd;
    double* gu = grads.u.data() + r * hd;
    for (int k = 0; k < xd; ++k) {
      gw[k] += d * record.x[k];
      in.x[k] += d * wr[k];
    }
    for (int k = 0; k < hd; ++k) {
      gu[k] += d * record.h[k];
      in.h[k] += d * ur[k];
    }
    grads.b[r] += d;
  }
  return in;
}

void Adam::Step(const ParamList& params, const ParamList& grads) {
  MASP_CHECK_EQ(params.size(), grads.size(), "adam block count");
  for (std::size_t b = 0; b < grads.size(); ++b) {
    MASP_CHECK_EQ(params[b].values.size(), grads[b].values.size(),
                  "adam block size of " + params[b].name);
    for (double g : grads[b].values) {
      if (!std::isfinite(g)) {
        throw NumericFault("non-finite gradient in parameter block '" +
                           grads[b].name + "'");
      }
    }
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  MASP_CHECK_EQ(m_.size(), params.size(), "adam state layout");

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    std::span<double> p = params[b].values;
    std::span<const double> g = grads[b].values;
    Vec& m = m_[b];
    Vec& v = v_[b];
    MASP_CHECK_EQ(m.size(), p.size(), "adam moment size of " + params[b].name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::Restore(std::int64_t step_count, std::vector<Vec> m,
                   std::vector<Vec> v) {
  MASP_CHECK(step_count >= 0, "negative adam step count");
  MASP_CHECK_EQ(m.size(), v.size(), "adam moment block count");
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

double GlobalNorm(const ParamList& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g.values) sq += x * x;
  }
  return std::sqrt(sq);
}

double ClipGlobalNorm(const ParamList& grads, double max_norm) {
  const double norm = GlobalNorm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& g : grads) {
      for (double& x : g.values) x *= scale;
    }
  }
  return norm;
}

void ZeroGrads(const ParamList& grads) {
  for (const auto& g : grads) std::fill(g.values.begin(), g.values.end(), 0.0);
}

double GradCheck(const std::function<double()>& loss, const ParamList& params,
                 const ParamList& analytic, double h) {
  MASP_CHECK_EQ(params.size(), analytic.size(), "grad check block count");
  double worst = 0.0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    std::span<double> p = params[b].values;
    MASP_CHECK_EQ(p.size(), analytic[b].values.size(),
                  "grad check block size of " + params[b].name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = loss();
      p[i] = saved - h;
      const double down = loss();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[b].values[i];
      worst = std::max(worst,
                       std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

}  // namespace masp

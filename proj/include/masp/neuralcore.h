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

#ifndef MASP_NEURALCORE_H_
#define MASP_NEURALCORE_H_

// Small dense-network numerics with hand-written backward passes. Everything
// is double precision and uses naive loops; the networks in this project are
// one hidden stage deep, so no general autodiff graph is needed.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace masp {

class Rng;

using Vec = std::vector<double>;

// A named, mutable view of one parameter (or gradient) block.
struct ParamRef {
  std::string name;
  std::span<double> values;
};
using ParamList = std::vector<ParamRef>;

enum class Activation { kNone, kRelu };

// y = act(W x + b), W stored row-major as out_dim x in_dim.
struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  Vec weights;
  Vec bias;

  DenseLayer() = default;
  DenseLayer(int in, int out);

  double& w(int row, int col) { return weights[row * in_dim + col]; }
  double w(int row, int col) const { return weights[row * in_dim + col]; }

  // Uniform in [-1/sqrt(in_dim), 1/sqrt(in_dim)], bias zero.
  void InitUniform(Rng& rng);
  void SetZero();
  void AppendParams(const std::string& prefix, ParamList& out);

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Forward activations needed to backpropagate through one dense call.
struct DenseRecord {
  Vec input;
  Vec output;  // post-activation
  Activation activation = Activation::kNone;
};

Vec DenseForward(const DenseLayer& layer, std::span<const double> x,
                 Activation activation, DenseRecord* record = nullptr);

// Accumulates dL/dW, dL/db into `grads` and returns dL/dx.
Vec DenseBackward(const DenseLayer& layer, const DenseRecord& record,
                  std::span<const double> grad_output, DenseLayer& grads);

// Numerically stable softmax (max-subtracted).
Vec Softmax(std::span<const double> logits);

double Sigmoid(double x);

// Standard LSTM cell. Gate blocks are stacked in the order input, forget,
// output, candidate: rows [0,h) belong to the input gate, [h,2h) to the
// forget gate and so on.
struct LstmCellParams {
  int x_dim = 0;
  int h_dim = 0;
  Vec w;  // (4*h_dim) x x_dim
  Vec u;  // (4*h_dim) x h_dim
  Vec b;  // 4*h_dim

  LstmCellParams() = default;
  LstmCellParams(int x, int h);

  void InitUniform(Rng& rng);
  void SetZero();
  void AppendParams(const std::string& prefix, ParamList& out);

  friend bool operator==(const LstmCellParams&,
                         const LstmCellParams&) = default;
};

struct LstmRecord {
  Vec x, h, c;
  Vec i, f, o, g;  // post-nonlinearity gate values
  Vec c_next, tanh_c_next;
};

struct LstmOutput {
  Vec h;
  Vec c;
};

LstmOutput LstmCell(const LstmCellParams& params, std::span<const double> x,
                    std::span<const double> h, std::span<const double> c,
                    LstmRecord* record = nullptr);

struct LstmInputGrads {
  Vec x, h, c;
};

// Given dL/dh' and dL/dc', accumulates parameter gradients into `grads` and
// returns the gradients with respect to the cell inputs.
LstmInputGrads LstmBackward(const LstmCellParams& params,
                            const LstmRecord& record,
                            std::span<const double> grad_h_next,
                            std::span<const double> grad_c_next,
                            LstmCellParams& grads);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Moment buffers are laid out block-by-block to match the
// ParamList passed to the first Step call.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  // Throws NumericFault naming the block if any gradient is non-finite; in
  // that case nothing is modified.
  void Step(const ParamList& params, const ParamList& grads);

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }
  const std::vector<Vec>& first_moment() const { return m_; }
  const std::vector<Vec>& second_moment() const { return v_; }

  void Restore(std::int64_t step_count, std::vector<Vec> m, std::vector<Vec> v);

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<Vec> m_;
  std::vector<Vec> v_;
};

double GlobalNorm(const ParamList& grads);

// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the
// norm before clipping. A non-positive max_norm disables clipping.
double ClipGlobalNorm(const ParamList& grads, double max_norm);

void ZeroGrads(const ParamList& grads);

// Compares analytic gradients against central differences of `loss`. The
// parameters are perturbed in place and restored. Returns
// max_i |analytic_i - numeric_i| / max(1, |analytic_i|).
double GradCheck(const std::function<double()>& loss, const ParamList& params,
                 const ParamList& analytic, double h = 1e-5);

}  // namespace masp

#endif  // MASP_NEURALCORE_H_

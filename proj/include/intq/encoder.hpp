// Copyright (c) 2026 The intq Authors. All Rights Reserved.
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

#pragma once

// A post-LN transformer encoder layer run with integer arithmetic only:
// 8-bit MatMuls with 32-bit accumulation, the integer GELU / softmax /
// LayerNorm kernels, and requantization between them. A double-precision
// reference layer with the same architecture is provided for comparison.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intq/error.hpp"
#include "intq/nonlinear.hpp"
#include "intq/quant.hpp"

namespace intq {

struct EncoderDims {
  int seq = 16;
  int hidden = 64;
  int heads = 4;
  int ffn = 256;

  int head_dim() const noexcept { return hidden / heads; }
  // Throws InvalidArgument on non-positive sizes or hidden % heads != 0.
  void validate() const;
  // "TxHxhxF", e.g. "16x64x4x256".
  static EncoderDims parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const EncoderDims&) const = default;
};

// Real-valued parameters of one layer. Matrices are row-major {in, out}.
struct LayerParams {
  EncoderDims dims;
  std::vector<double> wq, wk, wv, wo, w1, w2;
  std::vector<double> bq, bk, bv, bo, b1, b2;
  std::vector<double> ln1_gain, ln1_bias, ln2_gain, ln2_bias;

  // Gaussian weights with variance 1/fan_in, small biases, gains near 1.
  static LayerParams random(const EncoderDims& dims, uint64_t seed);
  void validate() const;
};

// Every activation edge of the layer carries one fixed QParams.
struct ActivationScales {
  QParams input = QParams::from_alpha(8, 1.0);
  QParams query = QParams::from_alpha(8, 1.0);  // Q / sqrt(d)
  QParams key = QParams::from_alpha(8, 1.0);
  QParams value = QParams::from_alpha(8, 1.0);
  QParams probs = QParams::from_alpha(8, 1.0);
  QParams context = QParams::from_alpha(8, 1.0);
  QParams attn_out = QParams::from_alpha(32, 1.0);
  QParams res1 = QParams::from_alpha(32, 1.0);
  QParams ln1_out = QParams::from_alpha(8, 1.0);
  QParams ffn1 = QParams::from_alpha(32, 1.0);
  QParams gelu_out = QParams::from_alpha(8, 1.0);
  QParams ffn2 = QParams::from_alpha(32, 1.0);
  QParams res2 = QParams::from_alpha(32, 1.0);
  QParams output = QParams::from_alpha(8, 1.0);
};

// Residual junctions add at a shared scale: the larger of the two branch
// ranges, with 16 significant bits inside a 32-bit container.
inline constexpr int32_t kResidualLevels = (1 << 15) - 1;
QParams residual_params(double alpha_a, double alpha_b);

// Quantized layer: 8-bit per-tensor weights, 32-bit biases at S_in * S_w,
// LayerNorm gain/bias, and the activation scales they were built against.
struct EncoderWeights {
  EncoderDims dims;
  QTensor wq, wk, wv, wo, w1, w2;  // 8-bit, shape {in, out}
  std::vector<int32_t> bq, bk, bv, bo, b1, b2;
  LayerNormParams ln1, ln2;
  ActivationScales act;

  static EncoderWeights build(const LayerParams& params, const ActivationScales& act);
  // Real parameters recovered from the integer payloads.
  LayerParams dequantized() const;
};

// Weights quantized to 8 bits and dequantized again; biases and LayerNorm
// parameters pass through. Used to calibrate against the weights the integer
// layer will actually see.
LayerParams fake_quantize_weights(const LayerParams& params);

// Intermediate values of the reference layer, per edge, row-major.
struct FloatTrace {
  std::vector<double> query, key, value, probs, context, attn_out, res1, ln1_out, ffn1, gelu_out,
      ffn2, res2, output;
};

inline constexpr double kReferenceLayerNormEps = 1e-12;

// Double-precision reference with exact GELU, softmax and LayerNorm.
// x is seq x hidden, row-major.
std::vector<double> fp32_reference_layer(std::span<const double> x, const LayerParams& params,
                                         FloatTrace* trace = nullptr);
std::vector<double> fp32_reference_attention(std::span<const double> x, const LayerParams& params);

// Max-abs (or percentile) ranges for every edge from reference runs on the
// samples. `input` forces the input QParams, e.g. to chain onto the previous
// layer's output. Throws InvalidArgument on an empty sample set or a sample of
// the wrong size.
ActivationScales calibrate_encoder(const LayerParams& params,
                                   std::span<const std::vector<double>> samples,
                                   const CalibrationOptions& options = {},
                                   std::optional<QParams> input = std::nullopt);

// 8-bit x 8-bit -> 32-bit at S_a * S_b. a: {M, K}, b: {K, N}; bias empty or N.
QTensor int_matmul(const QTensor& a, const QTensor& b, std::span<const int32_t> bias,
                   OverflowPolicy policy = kDefaultOverflowPolicy, int threads = 1);

// One node of an executed integer graph.
struct TraceNode {
  std::string op;
  std::vector<std::string> inputs;
  std::vector<std::string> params;  // weights and constants
  std::string output;
  int output_bits = 32;
};

struct ExecutionTrace {
  std::vector<TraceNode> nodes;
  // Producer of an edge, or nullptr for graph inputs and weights.
  const TraceNode* producer(std::string_view edge) const;
};

class IntegerEncoder {
 public:
  // Precomputes every requantization multiplier and kernel plan.
  static IntegerEncoder compile(std::vector<EncoderWeights> layers,
                                OverflowPolicy policy = kDefaultOverflowPolicy);

  const std::vector<EncoderWeights>& layers() const noexcept { return weights_; }
  const QParams& input_params() const { return weights_.front().act.input; }
  const QParams& output_params() const { return weights_.back().act.output; }
  OverflowPolicy policy() const noexcept { return policy_; }

  // Integer-only. x: 8-bit at input_params(), shape {seq, hidden}.
  QTensor run(const QTensor& x, int threads = 1, ExecutionTrace* trace = nullptr) const;
  // Attention block of one layer up to the output projection (32-bit result).
  QTensor self_attention(const QTensor& x, std::size_t layer = 0, int threads = 1) const;

  // quantize -> run -> dequantize.
  std::vector<double> infer(std::span<const double> x, int threads = 1) const;

  struct LayerPlan;

 private:
  std::vector<EncoderWeights> weights_;
  std::vector<LayerPlan> plans_;
  OverflowPolicy policy_ = kDefaultOverflowPolicy;
};

struct IntegerEncoder::LayerPlan {
  std::vector<int8_t> wq_t, wk_t, wv_t, wo_t, w1_t, w2_t;  // {out, in}
  kernels::RequantPlan q_req, k_req, v_req, probs_req, ctx_req;
  kernels::RequantPlan res1_x_req, res1_attn_req, ln1_req;
  kernels::RequantPlan gelu_req, res2_a_req, res2_b_req, out_req;
  kernels::SoftmaxPlan softmax;
  kernels::GeluPlan gelu;
  kernels::LayerNormPlan ln1_plan, ln2_plan;
  QParams attn_acc = QParams::from_alpha(32, 1.0);  // output projection accumulator
};

// Single layer, compiled on the fly.
QTensor encoder_layer(const QTensor& x, const EncoderWeights& weights,
                      OverflowPolicy policy = kDefaultOverflowPolicy);
// Attention block only; 32-bit output at S_context * S_wo.
QTensor self_attention(const QTensor& x, const EncoderWeights& weights,
                       OverflowPolicy policy = kDefaultOverflowPolicy);

// Random layers calibrated on `samples` generated inputs, each layer chained
// onto the previous one's output scale.
struct DemoModel {
  std::vector<LayerParams> params;  // as given to calibration
  std::vector<EncoderWeights> weights;
};
DemoModel build_demo_model(const EncoderDims& dims, int layers, int samples, uint64_t seed);
std::vector<std::vector<double>> random_inputs(const EncoderDims& dims, int count, uint64_t seed);

// sqrt(sum (a - b)^2 / sum b^2).
double relative_l2(std::span<const double> approx, std::span<const double> reference);

// Weight file: `<path>` is a JSON manifest; tensors live in `<path>.bin`,
// little-endian, each starting on a 64-byte boundary.
void save_weights(const std::filesystem::path& path, const std::vector<EncoderWeights>& layers);
std::vector<EncoderWeights> load_weights(const std::filesystem::path& path);

}  // namespace intq

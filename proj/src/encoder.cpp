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

#include "intq/encoder.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "encoder_detail.hpp"
#include "intq/oracles.hpp"
#include "intq/purity.hpp"

namespace intq {
namespace {

constexpr double kInt32Max = 2147483647.0;

void check_size(std::size_t got, std::size_t want, const std::string& what) {
  if (got != want) {
    throw InvalidArgument(what + ": expected " + std::to_string(want) + " values, got " +
                          std::to_string(got));
  }
}

std::size_t usize(int v) { return static_cast<std::size_t>(v); }

// ---------------------------------------------------------------------------
// Real-arithmetic helpers for the reference layer.

// out = a * w + b with a: m x k, w: k x n (row-major).
std::vector<double> dense(std::span<const double> a, const std::vector<double>& w,
                          const std::vector<double>& b, int m, int k, int n) {
  std::vector<double> out(usize(m * n));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out[usize(i * n + j)] = b[usize(j)];
    for (int p = 0; p < k; ++p) {
      const double av = a[usize(i * k + p)];
      const double* wrow = w.data() + usize(p * n);
      double* orow = out.data() + usize(i * n);
      for (int j = 0; j < n; ++j) orow[j] += av * wrow[j];
    }
  }
  return out;
}

std::vector<double> layer_norm_rows(const std::vector<double>& x, const std::vector<double>& gain,
                                    const std::vector<double>& bias, int rows, int cols) {
  std::vector<double> out(x.size());
  for (int i = 0; i < rows; ++i) {
    const std::span<const double> row(x.data() + usize(i * cols), usize(cols));
    const auto n = oracle_layernorm(row, kReferenceLayerNormEps);
    for (int j = 0; j < cols; ++j) {
      out[usize(i * cols + j)] = n[usize(j)] * gain[usize(j)] + bias[usize(j)];
    }
  }
  return out;
}

struct AttentionParts {
  std::vector<double> query, key, value, probs, context, attn_out;
};

AttentionParts reference_attention(std::span<const double> x, const LayerParams& p) {
  const auto& d = p.dims;
  const int t = d.seq, h = d.hidden, hd = d.head_dim();
  AttentionParts a;
  a.query = dense(x, p.wq, p.bq, t, h, h);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(hd));
  for (auto& v : a.query) v *= inv_sqrt_d;
  a.key = dense(x, p.wk, p.bk, t, h, h);
  a.value = dense(x, p.wv, p.bv, t, h, h);
  a.probs.assign(usize(d.heads * t * t), 0.0);
  a.context.assign(usize(t * h), 0.0);
  std::vector<double> scores(usize(t));
  for (int head = 0; head < d.heads; ++head) {
    const int off = head * hd;
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < t; ++j) {
        double s = 0.0;
        for (int k = 0; k < hd; ++k) s += a.query[usize(i * h + off + k)] * a.key[usize(j * h + off + k)];
        scores[usize(j)] = s;
      }
      const auto pr = oracle_softmax(scores);
      for (int j = 0; j < t; ++j) {
        a.probs[usize((head * t + i) * t + j)] = pr[usize(j)];
        for (int k = 0; k < hd; ++k) {
          a.context[usize(i * h + off + k)] += pr[usize(j)] * a.value[usize(j * h + off + k)];
        }
      }
    }
  }
  a.attn_out = dense(a.context, p.wo, p.bo, t, h, h);
  return a;
}

// ---------------------------------------------------------------------------

std::vector<int8_t> pack_transposed(const QTensor& w, int in, int out) {
  std::vector<int8_t> t(usize(in * out));
  for (int i = 0; i < in; ++i) {
    for (int j = 0; j < out; ++j) {
      t[usize(j * in + i)] = static_cast<int8_t>(w.data()[usize(i * out + j)]);
    }
  }
  return t;
}

bool same_bits(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

}  // namespace

// ---------------------------------------------------------------------------

void EncoderDims::validate() const {
  if (seq <= 0 || hidden <= 0 || heads <= 0 || ffn <= 0) {
    throw InvalidArgument("encoder dimensions must be positive, got " + to_string());
  }
  if (hidden % heads != 0) {
    throw InvalidArgument("hidden size " + std::to_string(hidden) + " is not divisible by " +
                          std::to_string(heads) + " heads");
  }
}

EncoderDims EncoderDims::parse(std::string_view text) {
  int values[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const auto end = i < 3 ? text.find('x', pos) : text.size();
    if (end == std::string_view::npos) break;
    const auto part = text.substr(pos, end - pos);
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), values[i]);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
      throw InvalidArgument("dimensions must look like TxHxhxF, got '" + std::string(text) + "'");
    }
    pos = end + 1;
    if (i == 3) {
      EncoderDims d{values[0], values[1], values[2], values[3]};
      d.validate();
      return d;
    }
  }
  throw InvalidArgument("dimensions must look like TxHxhxF, got '" + std::string(text) + "'");
}

std::string EncoderDims::to_string() const {
  return std::to_string(seq) + "x" + std::to_string(hidden) + "x" + std::to_string(heads) + "x" +
         std::to_string(ffn);
}

LayerParams LayerParams::random(const EncoderDims& dims, uint64_t seed) {
  purity::record_float_op("LayerParams::random");
  dims.validate();
  std::mt19937_64 rng(seed);
  const int h = dims.hidden, f = dims.ffn;
  auto matrix = [&](int in, int out) {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    std::vector<double> m(usize(in * out));
    for (auto& v : m) v = n(rng);
    return m;
  };
  auto vec = [&](int n, double mean, double sd) {
    std::normal_distribution<double> d(mean, sd);
    std::vector<double> v(usize(n));
    for (auto& x : v) x = d(rng);
    return v;
  };
  LayerParams p;
  p.dims = dims;
  p.wq = matrix(h, h);
  p.wk = matrix(h, h);
  p.wv = matrix(h, h);
  p.wo = matrix(h, h);
  p.w1 = matrix(h, f);
  p.w2 = matrix(f, h);
  p.bq = vec(h, 0.0, 0.1);
  p.bk = vec(h, 0.0, 0.1);
  p.bv = vec(h, 0.0, 0.1);
  p.bo = vec(h, 0.0, 0.1);
  p.b1 = vec(f, 0.0, 0.1);
  p.b2 = vec(h, 0.0, 0.1);
  p.ln1_gain = vec(h, 1.0, 0.1);
  p.ln1_bias = vec(h, 0.0, 0.1);
  p.ln2_gain = vec(h, 1.0, 0.1);
  p.ln2_bias = vec(h, 0.0, 0.1);
  return p;
}

void LayerParams::validate() const {
  dims.validate();
  const auto h = usize(dims.hidden), f = usize(dims.ffn);
  check_size(wq.size(), h * h, "wq");
  check_size(wk.size(), h * h, "wk");
  check_size(wv.size(), h * h, "wv");
  check_size(wo.size(), h * h, "wo");
  check_size(w1.size(), h * f, "w1");
  check_size(w2.size(), f * h, "w2");
  for (const auto* b : {&bq, &bk, &bv, &bo, &b2, &ln1_gain, &ln1_bias, &ln2_gain, &ln2_bias}) {
    check_size(b->size(), h, "hidden-sized vector");
  }
  check_size(b1.size(), f, "b1");
}

QParams residual_params(double alpha_a, double alpha_b) {
  return QParams::from_scale(32, std::max(alpha_a, alpha_b) / kResidualLevels);
}

// ---------------------------------------------------------------------------

namespace {

QTensor quantize_weight(const std::vector<double>& w, int in, int out) {
  return quantize(w, calibrate(w, 8), {usize(in), usize(out)});
}

std::vector<int32_t> quantize_bias(const std::vector<double>& b, double scale, const char* what) {
  std::vector<int32_t> q(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double v = std::round(b[i] / scale);
    if (!(std::fabs(v) <= kInt32Max)) {
      throw InvalidArgument(std::string(what) + ": bias does not fit a 32-bit accumulator");
    }
    q[i] = static_cast<int32_t>(v);
  }
  return q;
}

std::vector<double> dequantize_bias(const std::vector<int32_t>& b, double scale) {
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] * scale;
  return out;
}

}  // namespace

EncoderWeights EncoderWeights::build(const LayerParams& p, const ActivationScales& act) {
  purity::record_float_op("EncoderWeights::build");
  p.validate();
  const int h = p.dims.hidden, f = p.dims.ffn;
  auto wq = quantize_weight(p.wq, h, h);
  auto wk = quantize_weight(p.wk, h, h);
  auto wv = quantize_weight(p.wv, h, h);
  auto wo = quantize_weight(p.wo, h, h);
  auto w1 = quantize_weight(p.w1, h, f);
  auto w2 = quantize_weight(p.w2, f, h);
  const double sx = act.input.scale();
  auto bq = quantize_bias(p.bq, sx * wq.scale(), "bq");
  auto bk = quantize_bias(p.bk, sx * wk.scale(), "bk");
  auto bv = quantize_bias(p.bv, sx * wv.scale(), "bv");
  auto bo = quantize_bias(p.bo, act.context.scale() * wo.scale(), "bo");
  auto b1 = quantize_bias(p.b1, act.ln1_out.scale() * w1.scale(), "b1");
  auto b2 = quantize_bias(p.b2, act.gelu_out.scale() * w2.scale(), "b2");
  return EncoderWeights{p.dims,
                        std::move(wq),
                        std::move(wk),
                        std::move(wv),
                        std::move(wo),
                        std::move(w1),
                        std::move(w2),
                        std::move(bq),
                        std::move(bk),
                        std::move(bv),
                        std::move(bo),
                        std::move(b1),
                        std::move(b2),
                        LayerNormParams::from_real(p.ln1_gain, p.ln1_bias),
                        LayerNormParams::from_real(p.ln2_gain, p.ln2_bias),
                        act};
}

LayerParams EncoderWeights::dequantized() const {
  purity::record_float_op("EncoderWeights::dequantized");
  LayerParams p;
  p.dims = dims;
  p.wq = dequantize(wq);
  p.wk = dequantize(wk);
  p.wv = dequantize(wv);
  p.wo = dequantize(wo);
  p.w1 = dequantize(w1);
  p.w2 = dequantize(w2);
  const double sx = act.input.scale();
  p.bq = dequantize_bias(bq, sx * wq.scale());
  p.bk = dequantize_bias(bk, sx * wk.scale());
  p.bv = dequantize_bias(bv, sx * wv.scale());
  p.bo = dequantize_bias(bo, act.context.scale() * wo.scale());
  p.b1 = dequantize_bias(b1, act.ln1_out.scale() * w1.scale());
  p.b2 = dequantize_bias(b2, act.gelu_out.scale() * w2.scale());
  p.ln1_gain = dequantize_bias(ln1.gain, ln1.gain_scale);
  p.ln1_bias = dequantize_bias(ln1.bias, ln1.affine_scale());
  p.ln2_gain = dequantize_bias(ln2.gain, ln2.gain_scale);
  p.ln2_bias = dequantize_bias(ln2.bias, ln2.affine_scale());
  return p;
}

LayerParams fake_quantize_weights(const LayerParams& params) {
  params.validate();
  LayerParams p = params;
  const int h = p.dims.hidden, f = p.dims.ffn;
  p.wq = dequantize(quantize_weight(p.wq, h, h));
  p.wk = dequantize(quantize_weight(p.wk, h, h));
  p.wv = dequantize(quantize_weight(p.wv, h, h));
  p.wo = dequantize(quantize_weight(p.wo, h, h));
  p.w1 = dequantize(quantize_weight(p.w1, h, f));
  p.w2 = dequantize(quantize_weight(p.w2, f, h));
  return p;
}

// ---------------------------------------------------------------------------

std::vector<double> fp32_reference_attention(std::span<const double> x, const LayerParams& p) {
  purity::record_float_op("fp32_reference_attention");
  p.validate();
  check_size(x.size(), usize(p.dims.seq * p.dims.hidden), "fp32_reference_attention input");
  return reference_attention(x, p).attn_out;
}

std::vector<double> fp32_reference_layer(std::span<const double> x, const LayerParams& p,
                                         FloatTrace* trace) {
  purity::record_float_op("fp32_reference_layer");
  p.validate();
  const int t = p.dims.seq, h = p.dims.hidden, f = p.dims.ffn;
  check_size(x.size(), usize(t * h), "fp32_reference_layer input");

  auto a = reference_attention(x, p);
  std::vector<double> res1(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) res1[i] = x[i] + a.attn_out[i];
  auto ln1 = layer_norm_rows(res1, p.ln1_gain, p.ln1_bias, t, h);
  auto ffn1 = dense(ln1, p.w1, p.b1, t, h, f);
  std::vector<double> gelu(ffn1.size());
  for (std::size_t i = 0; i < ffn1.size(); ++i) gelu[i] = oracle_gelu(ffn1[i]);
  auto ffn2 = dense(gelu, p.w2, p.b2, t, f, h);
  std::vector<double> res2(ln1.size());
  for (std::size_t i = 0; i < ln1.size(); ++i) res2[i] = ln1[i] + ffn2[i];
  auto out = layer_norm_rows(res2, p.ln2_gain, p.ln2_bias, t, h);

  if (trace) {
    trace->query = std::move(a.query);
    trace->key = std::move(a.key);
    trace->value = std::move(a.value);
    trace->probs = std::move(a.probs);
    trace->context = std::move(a.context);
    trace->attn_out = std::move(a.attn_out);
    trace->res1 = std::move(res1);
    trace->ln1_out = ln1;
    trace->ffn1 = std::move(ffn1);
    trace->gelu_out = std::move(gelu);
    trace->ffn2 = std::move(ffn2);
    trace->res2 = std::move(res2);
    trace->output = out;
  }
  return out;
}

ActivationScales calibrate_encoder(const LayerParams& params,
                                   std::span<const std::vector<double>> samples,
                                   const CalibrationOptions& options,
                                   std::optional<QParams> input) {
  purity::record_float_op("calibrate_encoder");
  params.validate();
  if (samples.empty()) throw InvalidArgument("calibrate_encoder: no calibration samples");
  const auto n = usize(params.dims.seq * params.dims.hidden);

  std::vector<double> xs, q, k, v, pr, ctx, attn, ln1, ffn1, gelu, ffn2, out;
  auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
  };
  for (const auto& s : samples) {
    check_size(s.size(), n, "calibrate_encoder sample");
    FloatTrace tr;
    fp32_reference_layer(s, params, &tr);
    append(xs, s);
    append(q, tr.query);
    append(k, tr.key);
    append(v, tr.value);
    append(pr, tr.probs);
    append(ctx, tr.context);
    append(attn, tr.attn_out);
    append(ln1, tr.ln1_out);
    append(ffn1, tr.ffn1);
    append(gelu, tr.gelu_out);
    append(ffn2, tr.ffn2);
    append(out, tr.output);
  }

  ActivationScales a;
  a.input = input ? *input : calibrate(xs, 8, options);
  if (a.input.bits() != 8) throw InvalidArgument("calibrate_encoder: input must be 8-bit");
  a.query = calibrate(q, 8, options);
  a.key = calibrate(k, 8, options);
  a.value = calibrate(v, 8, options);
  a.probs = calibrate(pr, 8, options);
  a.context = calibrate(ctx, 8, options);
  a.attn_out = calibrate(attn, 32, options);
  a.res1 = residual_params(a.input.alpha(), a.attn_out.alpha());
  a.ln1_out = calibrate(ln1, 8, options);
  a.ffn1 = calibrate(ffn1, 32, options);
  a.gelu_out = calibrate(gelu, 8, options);
  a.ffn2 = calibrate(ffn2, 32, options);
  a.res2 = residual_params(a.ln1_out.alpha(), a.ffn2.alpha());
  a.output = calibrate(out, 8, options);
  return a;
}

// ---------------------------------------------------------------------------

QTensor int_matmul(const QTensor& a, const QTensor& b, std::span<const int32_t> bias,
                   OverflowPolicy policy, int threads) {
  purity::record_float_op("int_matmul");
  if (a.params().bits() != 8 || b.params().bits() != 8) {
    throw InvalidArgument("int_matmul: operands must be 8-bit tensors");
  }
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    throw InvalidArgument("int_matmul: operand shapes do not chain");
  }
  const int m = static_cast<int>(a.shape()[0]);
  const int k = static_cast<int>(a.shape()[1]);
  const int n = static_cast<int>(b.shape()[1]);
  std::vector<int8_t> a8(a.data().begin(), a.data().end());
  std::vector<int8_t> bt(usize(n * k));
  for (int p = 0; p < k; ++p) {
    for (int j = 0; j < n; ++j) bt[usize(j * k + p)] = static_cast<int8_t>(b.data()[usize(p * n + j)]);
  }
  std::vector<int32_t> out(usize(m * n));
  kernels::gemm_s8s8s32(a8, bt, bias, out, m, k, n, policy, threads);
  return QTensor(std::move(out), QParams::from_scale(32, a.scale() * b.scale()),
                 {usize(m), usize(n)});
}

// ---------------------------------------------------------------------------

const TraceNode* ExecutionTrace::producer(std::string_view edge) const {
  for (const auto& n : nodes) {
    if (n.output == edge) return &n;
  }
  return nullptr;
}

IntegerEncoder IntegerEncoder::compile(std::vector<EncoderWeights> layers, OverflowPolicy policy) {
  purity::record_float_op("IntegerEncoder::compile");
  if (layers.empty()) throw InvalidArgument("IntegerEncoder: no layers");
  IntegerEncoder enc;
  enc.policy_ = policy;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l];
    w.dims.validate();
    if (w.dims != layers.front().dims) {
      throw InvalidArgument("IntegerEncoder: all layers must share dimensions");
    }
    if (l > 0 && !(w.act.input == layers[l - 1].act.output)) {
      throw InvalidArgument("IntegerEncoder: layer " + std::to_string(l) +
                            " input scale does not match the previous layer's output");
    }
    const auto& a = w.act;
    const int h = w.dims.hidden, f = w.dims.ffn;
    LayerPlan p;
    p.wq_t = pack_transposed(w.wq, h, h);
    p.wk_t = pack_transposed(w.wk, h, h);
    p.wv_t = pack_transposed(w.wv, h, h);
    p.wo_t = pack_transposed(w.wo, h, h);
    p.w1_t = pack_transposed(w.w1, h, f);
    p.w2_t = pack_transposed(w.w2, f, h);

    const double sx = a.input.scale();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w.dims.head_dim()));
    p.q_req = make_requantizer(sx * w.wq.scale(), a.query, inv_sqrt_d);
    p.k_req = make_requantizer(sx * w.wk.scale(), a.key);
    p.v_req = make_requantizer(sx * w.wv.scale(), a.value);
    const auto sm = compile_softmax(a.query.scale() * a.key.scale());
    p.softmax = sm.plan;
    p.probs_req = make_requantizer(sm.output_scale, a.probs);
    p.ctx_req = make_requantizer(a.probs.scale() * a.value.scale(), a.context);
    p.attn_acc = QParams::from_scale(32, a.context.scale() * w.wo.scale());
    p.res1_x_req = make_requantizer(sx, a.res1);
    p.res1_attn_req = make_requantizer(p.attn_acc.scale(), a.res1);
    p.ln1_plan = w.ln1.plan();
    p.ln1_req = make_requantizer(w.ln1.affine_scale(), a.ln1_out);

    // Provable accumulator bound for the FFN1 output feeds the GELU plan.
    int32_t b1_max = 0;
    for (int32_t b : w.b1) b1_max = std::max(b1_max, b < 0 ? -b : b);
    const int64_t bound = int64_t{h} * 128 * 127 + b1_max;
    const auto gelu = compile_gelu(a.ln1_out.scale() * w.w1.scale(), bound);
    p.gelu = gelu.plan;
    p.gelu_req = make_requantizer(gelu.output_scale, a.gelu_out);
    p.res2_a_req = make_requantizer(w.ln1.affine_scale(), a.res2);
    p.res2_b_req = make_requantizer(a.gelu_out.scale() * w.w2.scale(), a.res2);
    p.ln2_plan = w.ln2.plan();
    p.out_req = make_requantizer(w.ln2.affine_scale(), a.output);
    enc.plans_.push_back(std::move(p));
  }
  enc.weights_ = std::move(layers);
  return enc;
}

QTensor IntegerEncoder::run(const QTensor& x, int threads, ExecutionTrace* trace) const {
  const auto& dims = weights_.front().dims;
  if (x.params().bits() != 8 || !same_bits(x.params().scale(), input_params().scale())) {
    throw InvalidArgument("IntegerEncoder::run: input must be 8-bit at the calibrated input scale");
  }
  check_size(x.size(), usize(dims.seq * dims.hidden), "IntegerEncoder::run input");
  const std::vector<int8_t> x8(x.data().begin(), x.data().end());
  auto y = detail::run_layers(x8, weights_, plans_, policy_, threads, trace);
  return QTensor(std::vector<int32_t>(y.begin(), y.end()), output_params(),
                 {usize(dims.seq), usize(dims.hidden)});
}

QTensor IntegerEncoder::self_attention(const QTensor& x, std::size_t layer, int threads) const {
  if (layer >= weights_.size()) throw InvalidArgument("self_attention: no such layer");
  const auto& w = weights_[layer];
  if (x.params().bits() != 8 || !same_bits(x.params().scale(), w.act.input.scale())) {
    throw InvalidArgument("self_attention: input must be 8-bit at the layer's input scale");
  }
  check_size(x.size(), usize(w.dims.seq * w.dims.hidden), "self_attention input");
  const std::vector<int8_t> x8(x.data().begin(), x.data().end());
  return QTensor(detail::run_self_attention(x8, w, plans_[layer], policy_, threads),
                 plans_[layer].attn_acc, {usize(w.dims.seq), usize(w.dims.hidden)});
}

std::vector<double> IntegerEncoder::infer(std::span<const double> x, int threads) const {
  const auto q = quantize(x, input_params(), {usize(weights_.front().dims.seq),
                                              usize(weights_.front().dims.hidden)});
  return dequantize(run(q, threads));
}

QTensor encoder_layer(const QTensor& x, const EncoderWeights& weights, OverflowPolicy policy) {
  return IntegerEncoder::compile({weights}, policy).run(x);
}

QTensor self_attention(const QTensor& x, const EncoderWeights& weights, OverflowPolicy policy) {
  return IntegerEncoder::compile({weights}, policy).self_attention(x);
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> random_inputs(const EncoderDims& dims, int count, uint64_t seed) {
  purity::record_float_op("random_inputs");
  dims.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<std::vector<double>> out(usize(count), std::vector<double>(usize(dims.seq * dims.hidden)));
  for (auto& s : out) {
    for (auto& v : s) v = n01(rng);
  }
  return out;
}

DemoModel build_demo_model(const EncoderDims& dims, int layers, int samples, uint64_t seed) {
  if (layers < 1) throw InvalidArgument("build_demo_model: need at least one layer");
  if (samples < 1) throw InvalidArgument("build_demo_model: need at least one calibration sample");
  DemoModel m;
  auto inputs = random_inputs(dims, samples, seed);
  std::optional<QParams> forced;
  for (int l = 0; l < layers; ++l) {
    const auto params = LayerParams::random(dims, seed * 1000003 + 17 + static_cast<uint64_t>(l));
    const auto act = calibrate_encoder(fake_quantize_weights(params), inputs, {}, forced);
    auto w = EncoderWeights::build(params, act);
    auto deq = w.dequantized();
    for (auto& s : inputs) s = fp32_reference_layer(s, deq);
    forced = act.output;
    m.params.push_back(std::move(deq));
    m.weights.push_back(std::move(w));
  }
  return m;
}

double relative_l2(std::span<const double> approx, std::span<const double> reference) {
  purity::record_float_op("relative_l2");
  check_size(approx.size(), reference.size(), "relative_l2");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < approx.size(); ++i) {
    num += (approx[i] - reference[i]) * (approx[i] - reference[i]);
    den += reference[i] * reference[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

}  // namespace intq

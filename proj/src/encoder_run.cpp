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

#include <cstddef>
#include <string>
#include <utility>

#include "encoder_detail.hpp"
#include "intq/kernels.hpp"

namespace intq::detail {
namespace {

std::size_t usize(int v) { return static_cast<std::size_t>(v); }

std::vector<int8_t> requant8(std::span<const int32_t> in, const kernels::RequantPlan& plan) {
  std::vector<int8_t> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = static_cast<int8_t>(kernels::requantize_one(in[i], plan));
  }
  return out;
}

std::vector<int32_t> requant32(std::span<const int32_t> in, const kernels::RequantPlan& plan) {
  std::vector<int32_t> out(in.size());
  kernels::requantize(in, out, plan);
  return out;
}

std::vector<int32_t> widen(std::span<const int8_t> in) { return {in.begin(), in.end()}; }


class Tracer {
 public:
  Tracer(ExecutionTrace* trace, std::string prefix) : trace_(trace), prefix_(std::move(prefix)) {}

  std::string edge(const std::string& name) const { return prefix_ + name; }

  void add(std::string op, std::vector<std::string> inputs, const std::string& output, int bits,
           std::vector<std::string> params = {}) {
    if (!trace_) return;
    TraceNode n;
    n.op = std::move(op);
    n.inputs = std::move(inputs);
    n.params = std::move(params);
    n.output = output;
    n.output_bits = bits;
    trace_->nodes.push_back(std::move(n));
  }

 private:
  ExecutionTrace* trace_;
  std::string prefix_;
};

struct AttentionResult {
  std::vector<int32_t> attn;  // T x H at the attention accumulator scale
};

AttentionResult run_attention(const std::vector<int8_t>& x8, const EncoderWeights& w,
                              const IntegerEncoder::LayerPlan& p, OverflowPolicy policy,
                              int threads, Tracer& tr, const std::string& x_edge) {
  const int t = w.dims.seq, h = w.dims.hidden, heads = w.dims.heads, d = w.dims.head_dim();
  std::vector<int32_t> acc(usize(t * h));

  kernels::gemm_s8s8s32(x8, p.wq_t, w.bq, acc, t, h, h, policy, threads);
  const auto q8 = requant8(acc, p.q_req);
  kernels::gemm_s8s8s32(x8, p.wk_t, w.bk, acc, t, h, h, policy, threads);
  const auto k8 = requant8(acc, p.k_req);
  kernels::gemm_s8s8s32(x8, p.wv_t, w.bv, acc, t, h, h, policy, threads);
  const auto v8 = requant8(acc, p.v_req);
  for (const char* name : {"q", "k", "v"}) {
    const std::string n(name);
    tr.add("matmul", {x_edge}, tr.edge(n + "_acc"), 32, {tr.edge("w" + n), tr.edge("b" + n)});
    tr.add("requantize", {tr.edge(n + "_acc")}, tr.edge(n), 8);
  }

  std::vector<int8_t> ctx8(usize(t * h));
  std::vector<int8_t> qh(usize(t * d)), kh(usize(t * d)), vth(usize(d * t));
  std::vector<int32_t> scores(usize(t * t)), fx(usize(t));
  std::vector<int8_t> probs(usize(t * t));
  std::vector<int32_t> cacc(usize(t * d));
  for (int head = 0; head < heads; ++head) {
    const int off = head * d;
    for (int i = 0; i < t; ++i) {
      for (int k = 0; k < d; ++k) {
        qh[usize(i * d + k)] = q8[usize(i * h + off + k)];
        kh[usize(i * d + k)] = k8[usize(i * h + off + k)];
        vth[usize(k * t + i)] = v8[usize(i * h + off + k)];
      }
    }
    kernels::gemm_s8s8s32(qh, kh, {}, scores, t, d, t, policy, threads);
    for (int i = 0; i < t; ++i) {
      const std::span<const int32_t> row(scores.data() + usize(i * t), usize(t));
      kernels::i_softmax(row, fx, p.softmax, policy);
      for (int j = 0; j < t; ++j) {
        probs[usize(i * t + j)] = static_cast<int8_t>(kernels::requantize_one(fx[usize(j)], p.probs_req));
      }
    }
    kernels::gemm_s8s8s32(probs, vth, {}, cacc, t, t, d, policy, threads);
    for (int i = 0; i < t; ++i) {
      for (int k = 0; k < d; ++k) {
        ctx8[usize(i * h + off + k)] =
            static_cast<int8_t>(kernels::requantize_one(cacc[usize(i * d + k)], p.ctx_req));
      }
    }
  }
  tr.add("matmul", {tr.edge("q"), tr.edge("k")}, tr.edge("scores"), 32);
  tr.add("softmax", {tr.edge("scores")}, tr.edge("probs_fx"), 32);
  tr.add("requantize", {tr.edge("probs_fx")}, tr.edge("probs"), 8);
  tr.add("matmul", {tr.edge("probs"), tr.edge("v")}, tr.edge("ctx_acc"), 32);
  tr.add("requantize", {tr.edge("ctx_acc")}, tr.edge("ctx"), 8);

  AttentionResult r;
  r.attn.resize(usize(t * h));
  kernels::gemm_s8s8s32(ctx8, p.wo_t, w.bo, r.attn, t, h, h, policy, threads);
  tr.add("matmul", {tr.edge("ctx")}, tr.edge("attn"), 32, {tr.edge("wo"), tr.edge("bo")});
  return r;
}

// Row-wise LayerNorm plus affine, 32-bit in and out.
std::vector<int32_t> layer_norm(const std::vector<int32_t>& x, const LayerNormParams& ln,
                                const kernels::LayerNormPlan& plan, int rows, int cols,
                                OverflowPolicy policy) {
  std::vector<int32_t> out(x.size());
  std::vector<int32_t> norm(usize(cols));
  for (int i = 0; i < rows; ++i) {
    const std::span<const int32_t> row(x.data() + usize(i * cols), usize(cols));
    kernels::i_layernorm(row, norm, plan, policy);
    kernels::affine(norm, ln.gain, ln.bias, std::span<int32_t>(out.data() + usize(i * cols), usize(cols)),
                    policy);
  }
  return out;
}

}  // namespace

std::vector<int8_t> run_layers(std::span<const int8_t> x, const std::vector<EncoderWeights>& weights,
                               const std::vector<IntegerEncoder::LayerPlan>& plans,
                               OverflowPolicy policy, int threads, ExecutionTrace* trace) {
  const auto& dims = weights.front().dims;
  const int t = dims.seq, h = dims.hidden, f = dims.ffn;
  std::vector<int8_t> x8(x.begin(), x.end());
  std::string x_edge = "L0.x";
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    const auto& p = plans[l];
    Tracer tr(trace, "L" + std::to_string(l) + ".");

    const auto attn = run_attention(x8, w, p, policy, threads, tr, x_edge);

    std::vector<int32_t> res1(usize(t * h));
    kernels::add(requant32(widen(x8), p.res1_x_req), requant32(attn.attn, p.res1_attn_req), res1,
                 policy);
    tr.add("requantize", {x_edge}, tr.edge("res1_x"), 32);
    tr.add("requantize", {tr.edge("attn")}, tr.edge("res1_attn"), 32);
    tr.add("add", {tr.edge("res1_x"), tr.edge("res1_attn")}, tr.edge("res1"), 32);

    const auto y1 = layer_norm(res1, w.ln1, p.ln1_plan, t, h, policy);
    const auto y1_8 = requant8(y1, p.ln1_req);
    tr.add("layernorm", {tr.edge("res1")}, tr.edge("ln1"), 32, {tr.edge("ln1_gain"), tr.edge("ln1_bias")});
    tr.add("requantize", {tr.edge("ln1")}, tr.edge("h1"), 8);

    std::vector<int32_t> ffn1(usize(t * f));
    kernels::gemm_s8s8s32(y1_8, p.w1_t, w.b1, ffn1, t, h, f, policy, threads);
    std::vector<int32_t> g(ffn1.size());
    kernels::i_gelu(ffn1, g, p.gelu, policy);
    const auto g8 = requant8(g, p.gelu_req);
    tr.add("matmul", {tr.edge("h1")}, tr.edge("ffn1"), 32, {tr.edge("w1"), tr.edge("b1")});
    tr.add("gelu", {tr.edge("ffn1")}, tr.edge("gelu"), 32);
    tr.add("requantize", {tr.edge("gelu")}, tr.edge("g"), 8);

    std::vector<int32_t> ffn2(usize(t * h));
    kernels::gemm_s8s8s32(g8, p.w2_t, w.b2, ffn2, t, f, h, policy, threads);
    std::vector<int32_t> res2(usize(t * h));
    kernels::add(requant32(y1, p.res2_a_req), requant32(ffn2, p.res2_b_req), res2, policy);
    tr.add("matmul", {tr.edge("g")}, tr.edge("ffn2"), 32, {tr.edge("w2"), tr.edge("b2")});
    tr.add("requantize", {tr.edge("ln1")}, tr.edge("res2_a"), 32);
    tr.add("requantize", {tr.edge("ffn2")}, tr.edge("res2_b"), 32);
    tr.add("add", {tr.edge("res2_a"), tr.edge("res2_b")}, tr.edge("res2"), 32);

    const auto y2 = layer_norm(res2, w.ln2, p.ln2_plan, t, h, policy);
    x8 = requant8(y2, p.out_req);
    tr.add("layernorm", {tr.edge("res2")}, tr.edge("ln2"), 32, {tr.edge("ln2_gain"), tr.edge("ln2_bias")});
    tr.add("requantize", {tr.edge("ln2")}, tr.edge("out"), 8);
    x_edge = tr.edge("out");
  }
  return x8;
}

std::vector<int32_t> run_self_attention(std::span<const int8_t> x, const EncoderWeights& weights,
                                        const IntegerEncoder::LayerPlan& plan,
                                        OverflowPolicy policy, int threads) {
  const std::vector<int8_t> x8(x.begin(), x.end());
  Tracer tr(nullptr, "");
  return run_attention(x8, weights, plan, policy, threads, tr, "x").attn;
}

}  // namespace intq::detail

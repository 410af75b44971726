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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "intq/encoder.hpp"
#include "intq/purity.hpp"

using namespace intq;

namespace {

std::vector<double> matmul_oracle(const std::vector<double>& a, const std::vector<double>& b,
                                  int m, int k, int n) {
  std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      long double s = 0;
      for (int p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      out[i * n + j] = static_cast<double>(s);
    }
  return out;
}

LayerParams zero_bias(LayerParams p) {
  for (auto* v : {&p.bq, &p.bk, &p.bv, &p.bo, &p.b1, &p.b2, &p.ln1_bias, &p.ln2_bias}) {
    std::fill(v->begin(), v->end(), 0.0);
  }
  return p;
}

EncoderWeights calibrated(const LayerParams& p, int samples, uint64_t seed) {
  const auto xs = random_inputs(p.dims, samples, seed);
  return EncoderWeights::build(p, calibrate_encoder(fake_quantize_weights(p), xs));
}

QTensor quantize_input(const std::vector<double>& x, const IntegerEncoder& enc) {
  const auto& d = enc.layers().front().dims;
  return quantize(x, enc.input_params(),
                  {static_cast<std::size_t>(d.seq), static_cast<std::size_t>(d.hidden)});
}

}  // namespace

TEST_CASE("dims parse and validate") {
  const auto d = EncoderDims::parse("16x64x4x256");
  CHECK(d == EncoderDims{});
  CHECK(d.head_dim() == 16);
  CHECK(d.to_string() == "16x64x4x256");
  CHECK_THROWS_AS(EncoderDims::parse("16x64x5x256"), InvalidArgument);
  CHECK_THROWS_AS(EncoderDims::parse("16x64x4"), InvalidArgument);
  CHECK_THROWS_AS(EncoderDims::parse("16x64x4x256x1"), InvalidArgument);
  CHECK_THROWS_AS(EncoderDims::parse("axbxcxd"), InvalidArgument);
  CHECK_THROWS_AS(EncoderDims::parse("0x64x4x256"), InvalidArgument);
}

TEST_CASE("int_matmul scalar") {
  const QTensor a({3}, QParams::from_scale(8, 0.5), {1, 1});
  const QTensor b({4}, QParams::from_scale(8, 0.25), {1, 1});
  const auto c = int_matmul(a, b, {});
  CHECK(c.data()[0] == 12);
  CHECK(c.scale() == 0.125);
  CHECK(c.params().bits() == 32);
  CHECK(dequantize(c)[0] == 1.5);
}

TEST_CASE("int_matmul with identity operand returns the other operand") {
  const int n = 5;
  std::vector<int32_t> eye(n * n, 0);
  for (int i = 0; i < n; ++i) eye[i * n + i] = 127;
  const QTensor a(eye, QParams::from_alpha(8, 1.0), {n, n});
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> u(-128, 127);
  std::vector<int32_t> bq(n * n);
  for (auto& v : bq) v = u(rng);
  const QTensor b(bq, QParams::from_alpha(8, 3.0), {n, n});
  const auto c = dequantize(int_matmul(a, b, {}));
  const auto want = dequantize(b);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("int_matmul random 16x16 within the rounding bound") {
  const int n = 16;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(n * n), b(n * n);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = 0.3 * g(rng);
  const auto pa = calibrate(a, 8), pb = calibrate(b, 8);
  const auto qa = quantize(a, pa, {n, n}), qb = quantize(b, pb, {n, n});
  const auto c = dequantize(int_matmul(qa, qb, {}, OverflowPolicy::kTrap, 3));

  // Exact against the dequantized operands: the integer product has no rounding.
  const auto exact = matmul_oracle(dequantize(qa), dequantize(qb), n, n, n);
  // Against the real operands: sum_k |a| S_b/2 + |b| S_a/2 + S_a S_b / 4.
  const auto real = matmul_oracle(a, b, n, n, n);
  int violations = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i * n + j);
      if (std::fabs(c[idx] - exact[idx]) > 1e-12 * (1 + std::fabs(exact[idx]))) ++violations;
      double bound = 0;
      for (int k = 0; k < n; ++k) {
        bound += std::fabs(a[i * n + k]) * pb.scale() / 2 + std::fabs(b[k * n + j]) * pa.scale() / 2 +
                 pa.scale() * pb.scale() / 4;
      }
      if (std::fabs(c[idx] - real[idx]) > bound) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("int_matmul bias and validation") {
  const QTensor a({1, 2, 3, 4}, QParams::from_scale(8, 1.0), {2, 2});
  const QTensor b({1, 0, 0, 1}, QParams::from_scale(8, 1.0), {2, 2});
  const std::vector<int32_t> bias{10, -10};
  const auto c = int_matmul(a, b, bias);
  CHECK(c.data() == std::vector<int32_t>{11, -8, 13, -6});
  const QTensor wrong({1, 2, 3}, QParams::from_scale(8, 1.0), {3, 1});
  CHECK_THROWS_AS(int_matmul(a, wrong, {}), InvalidArgument);
  const QTensor wide({1, 2, 3, 4}, QParams::from_scale(32, 1.0), {2, 2});
  CHECK_THROWS_AS(int_matmul(a, wide, {}), InvalidArgument);
}

TEST_CASE("reference attention on a hand-computed instance") {
  // Two tokens, one head of width 4, identity projections, no biases.
  EncoderDims d{2, 4, 1, 4};
  LayerParams p = zero_bias(LayerParams::random(d, 0));
  for (auto* w : {&p.wq, &p.wk, &p.wv, &p.wo}) {
    std::fill(w->begin(), w->end(), 0.0);
    for (int i = 0; i < 4; ++i) (*w)[i * 4 + i] = 1.0;
  }
  const std::vector<double> x{1, 0, 0, 0, 0, 1, 0, 0};
  // scores (x x^T) / sqrt(4) = [[0.5, 0], [0, 0.5]]
  const double p_self = std::exp(0.5) / (std::exp(0.5) + 1.0);
  const std::vector<double> want{p_self, 1 - p_self, 0, 0, 1 - p_self, p_self, 0, 0};
  const auto got = fp32_reference_attention(x, p);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::fabs(got[i] - want[i]) <= 1e-10);

  FloatTrace tr;
  fp32_reference_layer(x, p, &tr);
  CHECK(tr.probs.size() == 4);
  CHECK(std::fabs(tr.probs[0] - p_self) <= 1e-10);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::fabs(tr.attn_out[i] - want[i]) <= 1e-10);
}

TEST_CASE("reference layer: zero input and linearity") {
  EncoderDims d{4, 8, 2, 16};
  const auto p = zero_bias(LayerParams::random(d, 4));
  const std::vector<double> zero(32, 0.0);
  FloatTrace tr;
  const auto out = fp32_reference_layer(zero, p, &tr);
  for (double v : tr.attn_out) CHECK(v == 0.0);
  for (double v : tr.res1) CHECK(v == 0.0);
  for (double v : out) CHECK(v == 0.0);

  // Scaling the value projection scales the attention output (bo = 0).
  const auto x = random_inputs(d, 1, 9).front();
  auto scaled = p;
  for (auto& v : scaled.wv) v *= 3.0;
  const auto base = fp32_reference_attention(x, p);
  const auto tripled = fp32_reference_attention(x, scaled);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(tripled[i] == doctest::Approx(3.0 * base[i]).epsilon(1e-12));
  }
}

TEST_CASE("weights build and dequantize") {
  EncoderDims d{4, 8, 2, 16};
  const auto p = LayerParams::random(d, 5);
  const auto w = calibrated(p, 8, 6);
  CHECK(w.wq.params().bits() == 8);
  CHECK(w.w1.shape() == std::vector<std::size_t>{8, 16});
  const auto deq = w.dequantized();
  for (std::size_t i = 0; i < p.wq.size(); ++i) {
    CHECK(std::fabs(deq.wq[i] - p.wq[i]) <= w.wq.scale() / 2 * (1 + 1e-12));
  }
  const double sb = w.act.input.scale() * w.wq.scale();
  for (std::size_t i = 0; i < p.bq.size(); ++i) CHECK(std::fabs(deq.bq[i] - p.bq[i]) <= sb / 2 * (1 + 1e-9));

  auto bad = p;
  bad.wq.pop_back();
  CHECK_THROWS_AS(EncoderWeights::build(bad, w.act), InvalidArgument);
  const std::vector<std::vector<double>> none;
  CHECK_THROWS_AS(calibrate_encoder(p, none), InvalidArgument);
  const std::vector<std::vector<double>> short_sample{{1.0, 2.0}};
  CHECK_THROWS_AS(calibrate_encoder(p, short_sample), InvalidArgument);
}

TEST_CASE("self attention of a single token is the value path") {
  EncoderDims d{1, 16, 2, 32};
  const auto p = LayerParams::random(d, 12);
  const auto w = calibrated(p, 64, 13);
  const auto enc = IntegerEncoder::compile({w});
  const auto deq = w.dequantized();
  for (const auto& x : random_inputs(d, 8, 14)) {
    // Reference: softmax of a singleton is exactly 1.
    std::vector<double> value(16), want(16);
    for (int j = 0; j < 16; ++j) {
      value[j] = deq.bv[j];
      for (int k = 0; k < 16; ++k) value[j] += x[k] * deq.wv[k * 16 + j];
    }
    for (int j = 0; j < 16; ++j) {
      want[j] = deq.bo[j];
      for (int k = 0; k < 16; ++k) want[j] += value[k] * deq.wo[k * 16 + j];
    }
    const auto ref = fp32_reference_attention(x, deq);
    for (int j = 0; j < 16; ++j) CHECK(ref[j] == doctest::Approx(want[j]).epsilon(1e-12));
    const auto got = dequantize(enc.self_attention(quantize_input(x, enc)));
    CHECK(relative_l2(got, want) <= 5e-2);
  }
}

TEST_CASE("identical tokens give identical rows") {
  EncoderDims d{6, 16, 2, 32};
  const auto p = LayerParams::random(d, 15);
  const auto w = calibrated(p, 32, 16);
  const auto enc = IntegerEncoder::compile({w});
  auto x = random_inputs(d, 1, 17).front();
  for (int t = 1; t < 6; ++t) std::copy(x.begin(), x.begin() + 16, x.begin() + t * 16);
  const auto q = quantize_input(x, enc);
  for (const auto& out : {enc.self_attention(q), enc.run(q)}) {
    for (int t = 1; t < 6; ++t) {
      CHECK(std::equal(out.data().begin(), out.data().begin() + 16, out.data().begin() + t * 16));
    }
  }
}

TEST_CASE("zero input with zero biases gives a zero output") {
  EncoderDims d{4, 16, 2, 32};
  const auto p = zero_bias(LayerParams::random(d, 18));
  const auto w = calibrated(p, 32, 19);
  const std::vector<double> zero(64, 0.0);
  const auto q = quantize(zero, w.act.input, {4, 16});
  const auto out = encoder_layer(q, w, OverflowPolicy::kTrap);
  CHECK(out.params().bits() == 8);
  for (int32_t v : out.data()) CHECK(v == 0);
  for (double v : fp32_reference_layer(zero, w.dequantized())) CHECK(v == 0.0);
}

TEST_CASE("attention accuracy on a small instance") {
  EncoderDims d{8, 32, 2, 128};
  const auto p = LayerParams::random(d, 3);
  const auto w = calibrated(p, 128, 4);
  const auto deq = w.dequantized();
  double worst = 0.0;
  for (const auto& x : random_inputs(d, 32, 5)) {
    const auto ref = fp32_reference_attention(x, deq);
    const auto got = dequantize(self_attention(quantize(x, w.act.input, {8, 32}), w));
    worst = std::max(worst, relative_l2(got, ref));
  }
  MESSAGE("attention relative L2 (worst of 32): " << worst);
  CHECK(worst <= 5e-2);
}

TEST_CASE("encoder accuracy, single layer and stacked") {
  const EncoderDims d;
  const auto held_out = random_inputs(d, 32, 4242);
  double worst[2] = {0, 0};
  double mean[2] = {0, 0};
  for (int layers : {1, 2}) {
    const auto m = build_demo_model(d, layers, 128, 1);
    const auto enc = IntegerEncoder::compile(m.weights, OverflowPolicy::kTrap);
    for (const auto& x : held_out) {
      auto ref = x;
      for (const auto& p : m.params) ref = fp32_reference_layer(ref, p);
      const double r = relative_l2(enc.infer(x), ref);
      worst[layers - 1] = std::max(worst[layers - 1], r);
      mean[layers - 1] += r / static_cast<double>(held_out.size());
    }
  }
  MESSAGE("relative L2 one layer: mean " << mean[0] << " worst " << worst[0]);
  MESSAGE("relative L2 two layers: mean " << mean[1] << " worst " << worst[1]);
  CHECK(worst[0] <= 5e-2);
  CHECK(mean[1] < 2.0 * mean[0]);
}

TEST_CASE("integer path records no float operations") {
  const EncoderDims d{8, 32, 2, 64};
  const auto m = build_demo_model(d, 2, 16, 2);
  const auto enc = IntegerEncoder::compile(m.weights);
  const auto q = quantize_input(random_inputs(d, 1, 3).front(), enc);
  {
    purity::Probe probe;
    const auto out = enc.run(q, 2);
    const auto attn = enc.self_attention(q, 0);
    CHECK(probe.count() == 0);
    CHECK(out.size() == 8 * 32);
    CHECK(attn.size() == 8 * 32);
  }
  purity::Probe probe;
  (void)enc.infer(random_inputs(d, 1, 3).front());
  CHECK(probe.count() > 0);  // quantize / dequantize at the boundary
}

TEST_CASE("integer outputs are bit-identical across runs and thread counts") {
  const EncoderDims d{16, 64, 4, 256};
  const auto m = build_demo_model(d, 2, 8, 30);
  const auto enc = IntegerEncoder::compile(m.weights);
  for (const auto& x : random_inputs(d, 3, 31)) {
    const auto q = quantize_input(x, enc);
    const auto base = enc.run(q, 1).data();
    for (int threads : {1, 2, 3, 8}) CHECK(enc.run(q, threads).data() == base);
  }
}

TEST_CASE("every 8-bit matmul input comes from one requantize of a 32-bit edge") {
  const EncoderDims d{4, 16, 2, 32};
  const auto m = build_demo_model(d, 2, 8, 40);
  const auto enc = IntegerEncoder::compile(m.weights);
  ExecutionTrace trace;
  enc.run(quantize_input(random_inputs(d, 1, 41).front(), enc), 1, &trace);

  std::set<std::string> outputs;
  for (const auto& n : trace.nodes) CHECK(outputs.insert(n.output).second);

  int matmuls = 0, checked = 0;
  for (const auto& n : trace.nodes) {
    if (n.op != "matmul") continue;
    ++matmuls;
    CHECK(n.output_bits == 32);
    for (const auto& in : n.inputs) {
      const auto* prod = trace.producer(in);
      if (!prod) {
        CHECK(in == "L0.x");  // the quantized graph input
        continue;
      }
      CHECK(prod->op == "requantize");
      CHECK(prod->output_bits == 8);
      REQUIRE(prod->inputs.size() == 1);
      const auto* src = trace.producer(prod->inputs.front());
      REQUIRE(src != nullptr);
      CHECK(src->output_bits == 32);
      ++checked;
    }
  }
  // Per layer: Q, K, V, scores, context, output projection, FFN1, FFN2.
  CHECK(matmuls == 16);
  CHECK(checked > 0);
  const auto* out = trace.producer("L1.out");
  REQUIRE(out != nullptr);
  CHECK(out->output_bits == 8);
}

TEST_CASE("compile rejects inconsistent layers and inputs") {
  CHECK_THROWS_AS(IntegerEncoder::compile({}), InvalidArgument);
  const EncoderDims d{4, 16, 2, 32};
  const auto a = calibrated(LayerParams::random(d, 50), 8, 51);
  const auto b = calibrated(LayerParams::random(d, 52), 8, 53);
  CHECK_THROWS_AS(IntegerEncoder::compile({a, b}), InvalidArgument);
  const auto enc = IntegerEncoder::compile({a});
  const std::vector<double> x(64, 0.1);
  CHECK_THROWS_AS(enc.run(quantize(x, QParams::from_alpha(8, 123.0), {4, 16})), InvalidArgument);
  const std::vector<double> short_x(10, 0.1);
  CHECK_THROWS_AS(enc.run(quantize(short_x, enc.input_params())), InvalidArgument);
  CHECK_THROWS_AS(enc.self_attention(quantize(x, enc.input_params(), {4, 16}), 3), InvalidArgument);
}

TEST_CASE("weight file round trip") {
  const EncoderDims d{4, 16, 2, 32};
  const auto m = build_demo_model(d, 2, 8, 60);
  const auto dir = std::filesystem::temp_directory_path() / "intq_test_weights";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  save_weights(path, m.weights);
  CHECK(std::filesystem::file_size(path.string() + ".bin") > 0);

  const auto loaded = load_weights(path);
  REQUIRE(loaded.size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    const auto& a = m.weights[l];
    const auto& b = loaded[l];
    CHECK(a.dims == b.dims);
    CHECK(a.wq.data() == b.wq.data());
    CHECK(a.w2.data() == b.w2.data());
    CHECK(a.w2.params() == b.w2.params());
    CHECK(a.w2.shape() == b.w2.shape());
    CHECK(a.b1 == b.b1);
    CHECK(a.ln2.gain == b.ln2.gain);
    CHECK(a.ln2.bias == b.ln2.bias);
    CHECK(a.ln2.gain_scale == b.ln2.gain_scale);
    CHECK(a.act.res2 == b.act.res2);
    CHECK(a.act.output == b.act.output);
  }
  const auto e1 = IntegerEncoder::compile(m.weights);
  const auto e2 = IntegerEncoder::compile(loaded);
  const auto q = quantize_input(random_inputs(d, 1, 61).front(), e1);
  CHECK(e1.run(q).data() == e2.run(q).data());

  CHECK_THROWS_AS(load_weights(dir / "missing.json"), IoError);
  std::filesystem::resize_file(path.string() + ".bin", 100);
  CHECK_THROWS_AS(load_weights(path), InvalidData);
  {
    std::ofstream broken(path);
    broken << "{not json";
  }
  CHECK_THROWS_AS(load_weights(path), InvalidData);
  std::filesystem::remove_all(dir);
}

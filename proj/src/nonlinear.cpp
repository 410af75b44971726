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

#include "intq/nonlinear.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "intq/purity.hpp"
#include "intq/quant.hpp"

namespace intq {
namespace {

constexpr double kInt32Max = std::numeric_limits<int32_t>::max();
constexpr int64_t kInt32MaxInt = std::numeric_limits<int32_t>::max();
constexpr int kMaxPreShift = 40;

void check_scale(double s, const char* what) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw InvalidArgument(std::string(what) + ": input scale must be finite and positive");
  }
}

int64_t max_abs(std::span<const int32_t> q) {
  int64_t m = 0;
  for (int32_t v : q) m = std::max<int64_t>(m, v < 0 ? -int64_t{v} : int64_t{v});
  return m;
}

}  // namespace

ErfKernel compile_erf(double s_in) {
  purity::record_float_op("compile_erf");
  check_scale(s_in, "compile_erf");
  const auto coeffs = GeluConstants::coeffs();
  for (int shift = 0; shift <= kMaxPreShift; ++shift) {
    const double s = std::ldexp(s_in, shift);
    const double q_b = std::floor(coeffs.b / s);
    const double q_c = std::floor(coeffs.c / (coeffs.a * s * s));
    // Clipped input keeps q + q_b in [q_b, 0].
    if (q_b * q_b > kInt32Max || std::fabs(q_c) > kInt32Max ||
        std::fabs(q_b * q_b + q_c) > kInt32Max) {
      continue;
    }
    ErfKernel k;
    k.plan.input_shift = shift;
    k.plan.q_b = static_cast<int32_t>(q_b);
    k.plan.q_c = static_cast<int32_t>(q_c);
    k.plan.sign = coeffs.a < 0 ? -1 : 1;
    k.input_scale = s_in;
    k.output_scale = std::fabs(coeffs.a) * s * s;
    return k;
  }
  throw InvalidArgument("compile_erf: no input shift keeps the polynomial inside int32");
}

GeluKernel compile_gelu(double s_in, std::optional<int64_t> max_abs_q) {
  purity::record_float_op("compile_gelu");
  check_scale(s_in, "compile_gelu");
  GeluKernel k;
  const auto erf = compile_erf(s_in / std::numbers::sqrt2);
  k.plan.erf = erf.plan;

  const int64_t bound = std::max<int64_t>(max_abs_q.value_or(kInt32MaxInt), 1);
  const int input_bits = std::bit_width(static_cast<uint64_t>(bound));
  // |x| < 2^ib and q_erf + q_one < 2^(eb + 1), so ib + eb <= 29 fits.
  const int erf_bits = std::clamp(29 - input_bits, kMinErfBits, 24);
  const int input_shift = std::max(0, input_bits + erf_bits - 29);
  // Smallest shift with 1 / (s_erf 2^shift) <= 2^erf_bits.
  int shift = 0;
  while (1.0 / std::ldexp(erf.output_scale, shift) > std::ldexp(1.0, erf_bits)) ++shift;
  const double s_erf = std::ldexp(erf.output_scale, shift);
  k.plan.erf_shift = shift;
  k.plan.q_one = static_cast<int32_t>(std::floor(1.0 / s_erf));
  k.plan.input_shift = input_shift;
  k.input_scale = s_in;
  k.output_scale = std::ldexp(s_in, input_shift) * s_erf / 2.0;
  return k;
}

HGeluKernel compile_h_gelu(double s_in) {
  purity::record_float_op("compile_h_gelu");
  check_scale(s_in, "compile_h_gelu");
  const double six = std::round(6.0 / s_in);
  if (six > kInt32Max) throw InvalidArgument("compile_h_gelu: input scale too fine for int32");
  HGeluKernel k;
  k.plan.slope = make_multiplier(1.702);
  k.plan.q_three = static_cast<int32_t>(std::round(3.0 / s_in));
  k.plan.q_six = static_cast<int32_t>(six);
  k.input_scale = s_in;
  k.output_scale = s_in * s_in / 6.0;
  return k;
}

ExpKernel compile_exp(double s_in) {
  purity::record_float_op("compile_exp");
  check_scale(s_in, "compile_exp");
  if (s_in > ExpConstants::ln2) {
    throw InvalidArgument("compile_exp: input scale " + std::to_string(s_in) +
                          " is coarser than ln2");
  }
  const auto coeffs = ExpConstants::coeffs();
  for (int shift = 0; shift <= kMaxPreShift; ++shift) {
    const double s = std::ldexp(s_in, shift);
    if (s > ExpConstants::ln2) break;
    const double q_ln2 = std::floor(ExpConstants::ln2 / s);
    const double q_b = std::floor(coeffs.b / s);
    const double q_c = std::floor(coeffs.c / (coeffs.a * s * s));
    // q_p lies in (-q_ln2, 0] and q_b > q_ln2, so the peak is at q_p = 0.
    if (q_b * q_b + q_c > kInt32Max) continue;
    ExpKernel k;
    k.plan.input_shift = shift;
    k.plan.q_ln2 = static_cast<int32_t>(q_ln2);
    k.plan.q_b = static_cast<int32_t>(q_b);
    k.plan.q_c = static_cast<int32_t>(q_c);
    k.plan.max_shift = kExpMaxShift;
    k.input_scale = s_in;
    k.output_scale = coeffs.a * s * s;
    return k;
  }
  throw InvalidArgument("compile_exp: no input shift keeps the polynomial inside int32");
}

SoftmaxKernel compile_softmax(double s_in, int out_frac_bits) {
  if (out_frac_bits < 1 || out_frac_bits > 30) {
    throw InvalidArgument("compile_softmax: output fraction bits must lie in [1, 30]");
  }
  SoftmaxKernel k;
  k.plan.exp = compile_exp(s_in).plan;
  k.plan.out_frac_bits = out_frac_bits;
  k.input_scale = s_in;
  k.output_scale = std::ldexp(1.0, -out_frac_bits);
  return k;
}

IntResult run(const ErfKernel& k, std::span<const int32_t> q, OverflowPolicy policy) {
  IntResult r{std::vector<int32_t>(q.size()), k.output_scale};
  kernels::i_erf(q, r.q, k.plan, policy);
  return r;
}

IntResult run(const GeluKernel& k, std::span<const int32_t> q, OverflowPolicy policy) {
  IntResult r{std::vector<int32_t>(q.size()), k.output_scale};
  kernels::i_gelu(q, r.q, k.plan, policy);
  return r;
}

IntResult run(const HGeluKernel& k, std::span<const int32_t> q, OverflowPolicy policy) {
  IntResult r{std::vector<int32_t>(q.size()), k.output_scale};
  kernels::h_gelu(q, r.q, k.plan, policy);
  return r;
}

IntResult run(const ExpKernel& k, std::span<const int32_t> q, OverflowPolicy policy) {
  IntResult r{std::vector<int32_t>(q.size()), k.output_scale};
  kernels::i_exp(q, r.q, k.plan, policy);
  return r;
}

IntResult run(const SoftmaxKernel& k, std::span<const int32_t> q, OverflowPolicy policy) {
  IntResult r{std::vector<int32_t>(q.size()), k.output_scale};
  kernels::i_softmax(q, r.q, k.plan, policy);
  return r;
}

IntResult i_erf(std::span<const int32_t> q, double s, OverflowPolicy policy) {
  return run(compile_erf(s), q, policy);
}

IntResult i_gelu(std::span<const int32_t> q, double s, OverflowPolicy policy) {
  return run(compile_gelu(s, max_abs(q)), q, policy);
}

IntResult h_gelu(std::span<const int32_t> q, double s, OverflowPolicy policy) {
  return run(compile_h_gelu(s), q, policy);
}

IntResult i_exp(std::span<const int32_t> q, double s, OverflowPolicy policy) {
  return run(compile_exp(s), q, policy);
}

IntResult i_softmax(std::span<const int32_t> q, double s, OverflowPolicy policy) {
  if (q.empty()) throw InvalidArgument("i_softmax: empty input");
  return run(compile_softmax(s), q, policy);
}

// ---------------------------------------------------------------------------

double LayerNormParams::normalized_scale() const noexcept { return std::ldexp(1.0, -frac_bits); }

LayerNormParams LayerNormParams::without_affine(std::size_t channels, int frac_bits, int32_t eps) {
  if (channels == 0) throw InvalidArgument("LayerNormParams: channel count must be >= 1");
  LayerNormParams p;
  p.channels = channels;
  p.frac_bits = frac_bits;
  p.eps = eps;
  return p;
}

LayerNormParams LayerNormParams::from_real(std::span<const double> gain,
                                           std::span<const double> bias, int frac_bits,
                                           int32_t eps) {
  purity::record_float_op("LayerNormParams::from_real");
  if (gain.size() != bias.size()) {
    throw InvalidArgument("LayerNormParams: gain and bias lengths differ");
  }
  auto p = without_affine(gain.size(), frac_bits, eps);
  const auto gain_q = quantize(gain, calibrate(gain, 8));
  p.gain = gain_q.data();
  p.gain_scale = gain_q.scale();
  const double bias_scale = p.affine_scale();
  p.bias.resize(bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) {
    const double v = std::round(bias[i] / bias_scale);
    if (!(std::fabs(v) <= kInt32Max)) throw InvalidArgument("LayerNormParams: bias overflows int32");
    p.bias[i] = static_cast<int32_t>(v);
  }
  return p;
}

IntResult i_layernorm(std::span<const int32_t> q, double s, const LayerNormParams& params,
                      OverflowPolicy policy) {
  check_scale(s, "i_layernorm");
  if (params.channels == 0) throw InvalidArgument("i_layernorm: channel count must be >= 1");
  if (q.size() != params.channels) {
    throw InvalidArgument("i_layernorm: expected " + std::to_string(params.channels) +
                          " channels, got " + std::to_string(q.size()));
  }
  IntResult r{std::vector<int32_t>(q.size()), params.normalized_scale()};
  kernels::i_layernorm(q, r.q, params.plan(), policy);
  return r;
}

IntResult layernorm_affine(const IntResult& normalized, const LayerNormParams& params,
                           OverflowPolicy policy) {
  if (params.gain.size() != normalized.q.size()) {
    throw InvalidArgument("layernorm_affine: parameters carry no affine for this width");
  }
  IntResult r{std::vector<int32_t>(normalized.q.size()), params.affine_scale()};
  kernels::affine(normalized.q, params.gain, params.bias, r.q, policy);
  return r;
}

}  // namespace intq

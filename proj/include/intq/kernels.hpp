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

// Integer-only runtime kernels.
//
// Everything declared here takes and returns integers only. The plans are
// produced offline by the compile functions in quant.hpp, poly.hpp and
// nonlinear.hpp, which own all real-valued scale arithmetic. The
// implementation file is built with -mgeneral-regs-only when available, so
// no floating-point instruction can appear in it.

#include <cstdint>
#include <span>

#include "intq/error.hpp"

namespace intq::kernels {

// ---------------------------------------------------------------------------
// Elementary integer helpers.

// floor(num / den) for den > 0.
int64_t floor_div(int64_t num, int64_t den) noexcept;
// num / den rounded to nearest, ties away from zero, for den > 0.
int64_t round_div(int64_t num, int64_t den) noexcept;
// value / 2^shift rounded to nearest, ties away from zero. shift in [0, 62].
int64_t rounding_shift(int64_t value, int shift) noexcept;
// Narrow to int32 under the given policy. `what` names the kernel in errors.
int32_t narrow(int64_t value, OverflowPolicy policy, const char* what);

// ---------------------------------------------------------------------------
// Requantization: out = clamp(round(q * mantissa * 2^-shift), lo, hi).
// mantissa is a 31-bit fixed-point value in [2^30, 2^31); shift may be
// negative (left shift) for multipliers >= 2^31.
struct RequantPlan {
  int32_t mantissa = 1 << 30;
  int shift = 30;
  int32_t lo = INT32_MIN;
  int32_t hi = INT32_MAX;
};

int32_t requantize_one(int64_t q, const RequantPlan& plan) noexcept;
void requantize(std::span<const int32_t> in, std::span<int32_t> out, const RequantPlan& plan);

// ---------------------------------------------------------------------------
// Second-order polynomial: out = (q + q_b)^2 + q_c.
struct PolyPlan {
  int32_t q_b = 0;
  int32_t q_c = 0;
};

void i_poly(std::span<const int32_t> q, std::span<int32_t> out, const PolyPlan& plan,
            OverflowPolicy policy);

// ---------------------------------------------------------------------------
// Erf: out = sign * sgn(q) * ((min(|q| >> input_shift, -q_b) + q_b)^2 + q_c).
// `sign` is -1 when the polynomial's leading coefficient is negative so the
// attached output scale stays positive.
struct ErfPlan {
  int input_shift = 0;
  int32_t q_b = 0;
  int32_t q_c = 0;
  int32_t sign = 1;
};

int32_t erf_one(int32_t q, const ErfPlan& plan, OverflowPolicy policy);
void i_erf(std::span<const int32_t> q, std::span<int32_t> out, const ErfPlan& plan,
           OverflowPolicy policy);

// GELU: out = rshift(q, input_shift) * ((erf(q) >> erf_shift) + q_one), with
// rshift rounding half away from zero so the kernel stays symmetric.
struct GeluPlan {
  ErfPlan erf;
  int erf_shift = 0;
  int32_t q_one = 0;
  int input_shift = 0;
};

void i_gelu(std::span<const int32_t> q, std::span<int32_t> out, const GeluPlan& plan,
            OverflowPolicy policy);

// h-GELU: out = q * clamp(slope(q) + q_three, 0, q_six), slope being the
// fixed-point multiplier for 1.702.
struct HGeluPlan {
  RequantPlan slope;
  int32_t q_three = 0;
  int32_t q_six = 0;
};

void h_gelu(std::span<const int32_t> q, std::span<int32_t> out, const HGeluPlan& plan,
            OverflowPolicy policy);

// ---------------------------------------------------------------------------
// Exponential with range reduction: for non-positive q,
//   q' = max(q >> input_shift, -max_shift * q_ln2)
//   z  = floor(-q' / q_ln2),  q_p = q' + z * q_ln2
//   out = ((q_p + q_b)^2 + q_c) >> z
struct ExpPlan {
  int input_shift = 0;
  int32_t q_ln2 = 1;
  int32_t q_b = 0;
  int32_t q_c = 0;
  int max_shift = 30;
};

// Accepts 64-bit input so softmax can pass max-subtracted differences.
int32_t exp_one(int64_t q, const ExpPlan& plan, OverflowPolicy policy);
// Throws InvalidArgument if any input is positive.
void i_exp(std::span<const int32_t> q, std::span<int32_t> out, const ExpPlan& plan,
           OverflowPolicy policy);

// Softmax: out_i = floor(exp_i * 2^out_frac_bits / sum_j exp_j).
struct SoftmaxPlan {
  ExpPlan exp;
  int out_frac_bits = 15;
};

void i_softmax(std::span<const int32_t> q, std::span<int32_t> out, const SoftmaxPlan& plan,
               OverflowPolicy policy);

// ---------------------------------------------------------------------------
// Integer square root by Newton iteration from a power-of-two guess.
struct SqrtResult {
  int64_t root = 0;
  // Number of Newton updates evaluated, including the final one that
  // triggers the stop test.
  int iterations = 0;
};

inline constexpr int kSqrtIterationCap = 64;

// Valid for 0 <= n < 2^62. Throws InvalidArgument for negative n.
SqrtResult i_sqrt_counted(int64_t n);
int32_t i_sqrt(int32_t n);

// ---------------------------------------------------------------------------
// LayerNorm without affine: out_i = floor((q_i - mu) * 2^frac_bits / sigma)
// with mu the rounded mean and sigma = isqrt(floor(V / C) + eps).
struct LayerNormPlan {
  int frac_bits = 10;
  int32_t eps = 1;
};

void i_layernorm(std::span<const int32_t> q, std::span<int32_t> out, const LayerNormPlan& plan,
                 OverflowPolicy policy);

// out_i = x_i * gain_i + bias_i.
void affine(std::span<const int32_t> x, std::span<const int32_t> gain,
            std::span<const int32_t> bias, std::span<int32_t> out, OverflowPolicy policy);

// out_i = a_i + b_i.
void add(std::span<const int32_t> a, std::span<const int32_t> b, std::span<int32_t> out,
         OverflowPolicy policy);

// ---------------------------------------------------------------------------
// GEMM with 8-bit operands and 32-bit accumulation.
// a: rows x depth, row-major. bt: cols x depth (B transposed), row-major.
// bias: cols entries or empty. out: rows x cols, row-major.
// Rows are split across `threads` workers; results do not depend on it.
void gemm_s8s8s32(std::span<const int8_t> a, std::span<const int8_t> bt,
                  std::span<const int32_t> bias, std::span<int32_t> out, int rows, int depth,
                  int cols, OverflowPolicy policy, int threads = 1);

}  // namespace intq::kernels

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

// Integer-only nonlinear operators: erf, GELU, h-GELU, exp, softmax,
// square root and LayerNorm.
//
// Each operator has a compile step that turns a real input scale into an
// integer plan (offline, real arithmetic allowed) and a runtime step that
// only touches integers (see kernels.hpp). The i_* free functions do both
// for one-off use.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "intq/error.hpp"
#include "intq/kernels.hpp"
#include "intq/poly.hpp"

namespace intq {

// erf(x) ~= sgn(x) [a (min(|x|, -b) + b)^2 + c] on the whole real line.
struct GeluConstants {
  static constexpr double a = -0.2888;
  static constexpr double b = -1.769;
  static constexpr double c = 1.0;
  static constexpr PolyCoeffs coeffs() { return {a, b, c}; }
};

// exp(p) ~= a (p + b)^2 + c for p in (-ln2, 0].
struct ExpConstants {
  static constexpr double a = 0.3585;
  static constexpr double b = 1.353;
  static constexpr double c = 0.344;
  static constexpr double ln2 = std::numbers::ln2;
  static constexpr PolyCoeffs coeffs() { return {a, b, c}; }
};

inline constexpr int kSoftmaxFracBits = 15;
inline constexpr int kLayerNormFracBits = 10;
inline constexpr int kExpMaxShift = 30;
// Lowest erf output precision GELU will accept before narrowing its input.
inline constexpr int kMinErfBits = 14;

struct ErfKernel {
  kernels::ErfPlan plan;
  double input_scale = 1.0;
  double output_scale = 1.0;
};

struct GeluKernel {
  kernels::GeluPlan plan;
  double input_scale = 1.0;
  double output_scale = 1.0;
};

struct HGeluKernel {
  kernels::HGeluPlan plan;
  double input_scale = 1.0;
  double output_scale = 1.0;
};

struct ExpKernel {
  kernels::ExpPlan plan;
  double input_scale = 1.0;
  double output_scale = 1.0;
};

struct SoftmaxKernel {
  kernels::SoftmaxPlan plan;
  double input_scale = 1.0;
  double output_scale = 1.0;
};

// Picks the smallest input pre-shift that keeps the polynomial inside int32.
// The output scale is |a| S'^2 with the sign folded into the integers.
ErfKernel compile_erf(double s_in);

// Erf is evaluated at scale s_in / sqrt(2). The erf output, and the input
// itself when |q| may exceed about 2^15, are narrowed by right shifts so the
// final product fits in int32 for |q| <= max_abs_q (default: any int32).
GeluKernel compile_gelu(double s_in, std::optional<int64_t> max_abs_q = std::nullopt);

HGeluKernel compile_h_gelu(double s_in);

// Throws InvalidArgument for s_in > ln2 (no integer ln2 step exists).
ExpKernel compile_exp(double s_in);

SoftmaxKernel compile_softmax(double s_in, int out_frac_bits = kSoftmaxFracBits);

IntResult run(const ErfKernel& k, std::span<const int32_t> q,
              OverflowPolicy policy = kDefaultOverflowPolicy);
IntResult run(const GeluKernel& k, std::span<const int32_t> q,
              OverflowPolicy policy = kDefaultOverflowPolicy);
IntResult run(const HGeluKernel& k, std::span<const int32_t> q,
              OverflowPolicy policy = kDefaultOverflowPolicy);
IntResult run(const ExpKernel& k, std::span<const int32_t> q,
              OverflowPolicy policy = kDefaultOverflowPolicy);
IntResult run(const SoftmaxKernel& k, std::span<const int32_t> q,
              OverflowPolicy policy = kDefaultOverflowPolicy);

IntResult i_erf(std::span<const int32_t> q, double s, OverflowPolicy policy = kDefaultOverflowPolicy);
// Compiles with max_abs_q taken from the data.
IntResult i_gelu(std::span<const int32_t> q, double s,
                 OverflowPolicy policy = kDefaultOverflowPolicy);
IntResult h_gelu(std::span<const int32_t> q, double s,
                 OverflowPolicy policy = kDefaultOverflowPolicy);
// Throws InvalidArgument when an input is positive.
IntResult i_exp(std::span<const int32_t> q, double s, OverflowPolicy policy = kDefaultOverflowPolicy);
// Throws InvalidArgument for an empty vector.
IntResult i_softmax(std::span<const int32_t> q, double s,
                    OverflowPolicy policy = kDefaultOverflowPolicy);

using kernels::i_sqrt;
using kernels::i_sqrt_counted;

// ---------------------------------------------------------------------------
// LayerNorm.

struct LayerNormParams {
  std::size_t channels = 0;
  int frac_bits = kLayerNormFracBits;
  int32_t eps = 1;
  // Per-channel affine transform: gain as 8-bit codes at gain_scale, bias as
  // 32-bit codes at 2^-frac_bits * gain_scale. Empty means no affine.
  std::vector<int32_t> gain;
  std::vector<int32_t> bias;
  double gain_scale = 1.0;

  kernels::LayerNormPlan plan() const noexcept { return {frac_bits, eps}; }
  double normalized_scale() const noexcept;
  double affine_scale() const noexcept { return normalized_scale() * gain_scale; }

  // Quantizes real gain (8-bit, max-abs) and bias. Throws InvalidArgument on
  // mismatched lengths or an all-zero gain.
  static LayerNormParams from_real(std::span<const double> gain, std::span<const double> bias,
                                   int frac_bits = kLayerNormFracBits, int32_t eps = 1);
  static LayerNormParams without_affine(std::size_t channels, int frac_bits = kLayerNormFracBits,
                                        int32_t eps = 1);
};

// Pre-affine normalisation; the input scale cancels, so the result is read at
// 2^-frac_bits. Throws InvalidArgument if q.size() != params.channels or the
// channel count is zero.
IntResult i_layernorm(std::span<const int32_t> q, double s, const LayerNormParams& params,
                      OverflowPolicy policy = kDefaultOverflowPolicy);

// Applies gain and bias to i_layernorm output; result at params.affine_scale().
IntResult layernorm_affine(const IntResult& normalized, const LayerNormParams& params,
                           OverflowPolicy policy = kDefaultOverflowPolicy);

}  // namespace intq

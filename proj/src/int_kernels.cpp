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

// No floating point in this file. It is compiled with -mgeneral-regs-only
// where supported, so a stray double fails the build.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "intq/kernels.hpp"

namespace intq::kernels {
namespace {

constexpr int64_t kInt32Max = std::numeric_limits<int32_t>::max();
constexpr int64_t kInt32Min = std::numeric_limits<int32_t>::min();
// Largest magnitude whose square fits in int64.
constexpr int64_t kSquareLimit = 3037000499;

void check_sizes(std::size_t in, std::size_t out, const char* what) {
  if (in != out) {
    throw InvalidArgument(std::string(what) + ": output length " + std::to_string(out) +
                          " does not match input length " + std::to_string(in));
  }
}

int64_t magnitude(int64_t v) noexcept { return v < 0 ? -v : v; }

int32_t sgn(int64_t v) noexcept { return (v > 0) - (v < 0); }

// v*v + c in int64, or the saturated sentinel when |v| is too large.
int64_t square_plus(int64_t v, int64_t c) noexcept {
  if (magnitude(v) > kSquareLimit) return std::numeric_limits<int64_t>::max();
  return v * v + c;
}

}  // namespace

int64_t floor_div(int64_t num, int64_t den) noexcept {
  int64_t q = num / den;
  if ((num % den != 0) && (num < 0)) --q;
  return q;
}

int64_t round_div(int64_t num, int64_t den) noexcept {
  int64_t q = num / den;
  int64_t r = num % den;
  if (r >= 0) {
    if (2 * r >= den) ++q;
  } else {
    if (-2 * r >= den) --q;
  }
  return q;
}

int64_t rounding_shift(int64_t value, int shift) noexcept {
  if (shift <= 0) return value;
  const int64_t mag = magnitude(value);
  const int64_t rounded = (mag + (int64_t{1} << (shift - 1))) >> shift;
  return value < 0 ? -rounded : rounded;
}

int32_t narrow(int64_t value, OverflowPolicy policy, const char* what) {
  if (value > kInt32Max || value < kInt32Min) {
    if (policy == OverflowPolicy::kTrap) {
      throw OverflowError(std::string(what) + ": 32-bit accumulator overflow (" +
                          std::to_string(value) + ")");
    }
    return value > 0 ? static_cast<int32_t>(kInt32Max) : static_cast<int32_t>(kInt32Min);
  }
  return static_cast<int32_t>(value);
}

// ---------------------------------------------------------------------------

int32_t requantize_one(int64_t q, const RequantPlan& plan) noexcept {
  const int64_t product = q * plan.mantissa;
  int64_t r;
  if (plan.shift >= 63) {
    r = 0;
  } else if (plan.shift >= 0) {
    r = rounding_shift(product, plan.shift);
  } else {
    const int left = -plan.shift;
    const int64_t limit = std::numeric_limits<int64_t>::max() >> left;
    if (product > limit) {
      r = std::numeric_limits<int64_t>::max();
    } else if (product < -limit) {
      r = std::numeric_limits<int64_t>::min();
    } else {
      r = product * (int64_t{1} << left);
    }
  }
  return static_cast<int32_t>(std::clamp<int64_t>(r, plan.lo, plan.hi));
}

void requantize(std::span<const int32_t> in, std::span<int32_t> out, const RequantPlan& plan) {
  check_sizes(in.size(), out.size(), "requantize");
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = requantize_one(in[i], plan);
}

// ---------------------------------------------------------------------------

void i_poly(std::span<const int32_t> q, std::span<int32_t> out, const PolyPlan& plan,
            OverflowPolicy policy) {
  check_sizes(q.size(), out.size(), "i_poly");
  for (std::size_t i = 0; i < q.size(); ++i) {
    const int64_t v = int64_t{q[i]} + plan.q_b;
    out[i] = narrow(square_plus(v, plan.q_c), policy, "i_poly");
  }
}

int32_t erf_one(int32_t q, const ErfPlan& plan, OverflowPolicy policy) {
  const int32_t s = sgn(q);
  // Shift the magnitude, not the signed value, so odd symmetry is exact.
  const int64_t mag = magnitude(q) >> plan.input_shift;
  const int64_t clipped = std::min<int64_t>(mag, -int64_t{plan.q_b});
  const int64_t poly = square_plus(clipped + plan.q_b, plan.q_c);
  return narrow(int64_t{plan.sign} * s * narrow(poly, policy, "i_erf"), policy, "i_erf");
}

void i_erf(std::span<const int32_t> q, std::span<int32_t> out, const ErfPlan& plan,
           OverflowPolicy policy) {
  check_sizes(q.size(), out.size(), "i_erf");
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = erf_one(q[i], plan, policy);
}

void i_gelu(std::span<const int32_t> q, std::span<int32_t> out, const GeluPlan& plan,
            OverflowPolicy policy) {
  check_sizes(q.size(), out.size(), "i_gelu");
  for (std::size_t i = 0; i < q.size(); ++i) {
    const int64_t e = erf_one(q[i], plan.erf, policy) >> plan.erf_shift;
    const int64_t x = rounding_shift(q[i], plan.input_shift);
    out[i] = narrow(x * (e + plan.q_one), policy, "i_gelu");
  }
}

void h_gelu(std::span<const int32_t> q, std::span<int32_t> out, const HGeluPlan& plan,
            OverflowPolicy policy) {
  check_sizes(q.size(), out.size(), "h_gelu");
  for (std::size_t i = 0; i < q.size(); ++i) {
    const int64_t t = int64_t{requantize_one(q[i], plan.slope)} + plan.q_three;
    const int64_t relu6 = std::clamp<int64_t>(t, 0, plan.q_six);
    out[i] = narrow(int64_t{q[i]} * relu6, policy, "h_gelu");
  }
}

// ---------------------------------------------------------------------------

int32_t exp_one(int64_t q, const ExpPlan& plan, OverflowPolicy policy) {
  if (q > 0) {
    throw InvalidArgument("i_exp: input must be non-positive, got " + std::to_string(q));
  }
  int64_t x = q >> plan.input_shift;
  const int64_t lower = -int64_t{plan.max_shift} * plan.q_ln2;
  if (x < lower) x = lower;
  const int64_t z = (-x) / plan.q_ln2;
  const int64_t p = x + z * plan.q_ln2;
  const int32_t poly = narrow(square_plus(p + plan.q_b, plan.q_c), policy, "i_exp");
  return poly >> z;
}

void i_exp(std::span<const int32_t> q, std::span<int32_t> out, const ExpPlan& plan,
           OverflowPolicy policy) {
  check_sizes(q.size(), out.size(), "i_exp");
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = exp_one(q[i], plan, policy);
}

void i_softmax(std::span<const int32_t> q, std::span<int32_t> out, const SoftmaxPlan& plan,
               OverflowPolicy policy) {
  if (q.empty()) throw InvalidArgument("i_softmax: empty input");
  check_sizes(q.size(), out.size(), "i_softmax");
  const int64_t qmax = *std::max_element(q.begin(), q.end());
  int64_t sum = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = exp_one(int64_t{q[i]} - qmax, plan.exp, policy);
    sum += out[i];
  }
  // sum > 0: the maximum element maps to L(0) >> 0.
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = static_cast<int32_t>((int64_t{out[i]} << plan.out_frac_bits) / sum);
  }
}

// ---------------------------------------------------------------------------

SqrtResult i_sqrt_counted(int64_t n) {
  if (n < 0) throw InvalidArgument("i_sqrt: negative input " + std::to_string(n));
  if (n == 0) return {0, 0};
  const int bits = std::bit_width(static_cast<uint64_t>(n));
  int64_t x = int64_t{1} << ((bits + 1) / 2);
  for (int it = 1; it <= kSqrtIterationCap; ++it) {
    const int64_t next = (x + n / x) / 2;
    if (next >= x) return {x, it};
    x = next;
  }
  throw std::logic_error("i_sqrt: iteration cap exceeded for n = " + std::to_string(n));
}

int32_t i_sqrt(int32_t n) { return static_cast<int32_t>(i_sqrt_counted(n).root); }

// ---------------------------------------------------------------------------

void i_layernorm(std::span<const int32_t> q, std::span<int32_t> out, const LayerNormPlan& plan,
                 OverflowPolicy policy) {
  if (q.empty()) throw InvalidArgument("i_layernorm: channel count must be >= 1");
  check_sizes(q.size(), out.size(), "i_layernorm");
  const auto channels = static_cast<int64_t>(q.size());

  int64_t sum = 0;
  for (int32_t v : q) sum += v;
  const int64_t mean = round_div(sum, channels);

  int64_t max_dev = 0;
  for (int32_t v : q) max_dev = std::max(max_dev, magnitude(int64_t{v} - mean));

  // The variance sum stays in 64 bits. Inputs spanning more than ~2^31 / sqrt(C)
  // are pre-shifted; ordinary activations never take this branch.
  int pre = 0;
  const int64_t budget = (int64_t{1} << 62) / channels;
  while ((max_dev >> pre) > 0 && (max_dev >> pre) > budget / (max_dev >> pre)) ++pre;

  int64_t sum_sq = 0;
  for (int32_t v : q) {
    const int64_t d = magnitude(int64_t{v} - mean) >> pre;
    sum_sq += d * d;
  }
  int64_t var = sum_sq / channels + plan.eps;

  // Narrow rows lose precision to the rounded mean and the floored root.
  // Redo the statistics on x * 2^up so the variance fills about 30 bits.
  int up = 0;
  if (pre == 0 && var <= kInt32Max) {
    while (up < 15 && (var << (2 * (up + 1))) <= (int64_t{1} << 30)) ++up;
    while (up > 0 && magnitude(sum) > (INT64_MAX >> up)) --up;
  }
  int64_t center = mean;
  if (up > 0) {
    center = round_div(sum * (int64_t{1} << up), channels);
    sum_sq = 0;
    for (int32_t v : q) {
      const int64_t d = int64_t{v} * (int64_t{1} << up) - center;
      sum_sq += d * d;
    }
    var = sum_sq / channels + plan.eps * (int64_t{1} << (2 * up));
  }
  int post = 0;
  while (var > kInt32Max) {
    var >>= 2;
    ++post;
  }
  const int64_t sigma = i_sqrt_counted(var).root << (pre + post);

  for (std::size_t i = 0; i < q.size(); ++i) {
    const int64_t d = int64_t{q[i]} * (int64_t{1} << up) - center;
    out[i] = narrow(floor_div(d * (int64_t{1} << plan.frac_bits), sigma), policy, "i_layernorm");
  }
}

void affine(std::span<const int32_t> x, std::span<const int32_t> gain,
            std::span<const int32_t> bias, std::span<int32_t> out, OverflowPolicy policy) {
  check_sizes(x.size(), gain.size(), "affine gain");
  check_sizes(x.size(), bias.size(), "affine bias");
  check_sizes(x.size(), out.size(), "affine");
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = narrow(int64_t{x[i]} * gain[i] + bias[i], policy, "affine");
  }
}

void add(std::span<const int32_t> a, std::span<const int32_t> b, std::span<int32_t> out,
         OverflowPolicy policy) {
  check_sizes(a.size(), b.size(), "add");
  check_sizes(a.size(), out.size(), "add");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = narrow(int64_t{a[i]} + b[i], policy, "add");
}

}  // namespace intq::kernels

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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "intq/kernels.hpp"

namespace intq {

// Uniform symmetric quantization parameters.
//
// A b-bit tensor holds integers in [-2^(b-1), 2^(b-1) - 1] and represents
// real values scale * q, with scale = alpha / (2^(b-1) - 1). Only 8-bit
// (MatMul operands) and 32-bit (accumulators, nonlinear kernel I/O) roles
// exist.
class QParams {
 public:
  // Throws InvalidArgument unless bits is 8 or 32 and alpha is finite and > 0.
  static QParams from_alpha(int bits, double alpha);
  // Same as from_alpha with alpha = scale * (2^(b-1) - 1).
  static QParams from_scale(int bits, double scale);

  int bits() const noexcept { return bits_; }
  double alpha() const noexcept { return alpha_; }
  double scale() const noexcept { return scale_; }
  int32_t qmax() const noexcept;
  int32_t qmin() const noexcept;

  bool operator==(const QParams&) const = default;

 private:
  QParams(int bits, double alpha, double scale) : bits_(bits), alpha_(alpha), scale_(scale) {}

  int bits_;
  double alpha_;
  double scale_;
};

// Integer payload plus its quantization metadata. Payload values are stored
// as int32 regardless of role; the constructor checks they fit params.bits().
class QTensor {
 public:
  QTensor(std::vector<int32_t> data, QParams params, std::vector<std::size_t> shape = {});

  const std::vector<int32_t>& data() const noexcept { return data_; }
  const QParams& params() const noexcept { return params_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  double scale() const noexcept { return params_.scale(); }

 private:
  std::vector<int32_t> data_;
  QParams params_;
  std::vector<std::size_t> shape_;
};

// round-to-nearest (ties away from zero) of clip(x, -alpha, alpha) / scale.
// Throws InvalidData on a non-finite element.
QTensor quantize(std::span<const double> x, const QParams& params,
                 std::vector<std::size_t> shape = {});
int32_t quantize_value(double x, const QParams& params);

std::vector<double> dequantize(const QTensor& t);

// Dyadic form of a positive real multiplier: m ~= mantissa * 2^-shift with
// mantissa in [2^30, 2^31).
kernels::RequantPlan make_multiplier(double multiplier);

// Precomputed rescale from a tensor at scale `in_scale` to `out`.
// `fold` is an extra constant factor absorbed into the multiplier, e.g. the
// 1/sqrt(d) of attention scores.
kernels::RequantPlan make_requantizer(double in_scale, const QParams& out, double fold = 1.0);

// q_out = clip(round(q_in * S_in * fold / S_out)). The multiplier is built once
// per call; the per-element work is integer multiply and rounding shift.
// Any input role is accepted; the output role and clipping come from `out`.
QTensor requantize(const QTensor& t, const QParams& out, double fold = 1.0);

enum class CalibrationMethod { kMaxAbs, kPercentile };

struct CalibrationOptions {
  CalibrationMethod method = CalibrationMethod::kMaxAbs;
  // Used with kPercentile, in (0, 100].
  double percentile = 99.9;
};

// Static activation range from calibration samples. Throws InvalidArgument on
// an empty sample set or one whose clipping range would be zero, and
// InvalidData on non-finite values.
QParams calibrate(std::span<const std::vector<double>> samples, int bits,
                  const CalibrationOptions& options = {});
QParams calibrate(std::span<const double> samples, int bits, const CalibrationOptions& options = {});

}  // namespace intq

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

#include "intq/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "intq/error.hpp"
#include "intq/purity.hpp"

namespace intq {
namespace {

int32_t qmax_for(int bits) {
  return bits == 8 ? 127 : std::numeric_limits<int32_t>::max();
}

void check_bits(int bits) {
  if (bits != 8 && bits != 32) {
    throw InvalidArgument("unsupported bit width " + std::to_string(bits) + " (expected 8 or 32)");
  }
}

}  // namespace

QParams QParams::from_alpha(int bits, double alpha) {
  purity::record_float_op("QParams::from_alpha");
  check_bits(bits);
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw InvalidArgument("clipping range alpha must be finite and positive, got " +
                          std::to_string(alpha));
  }
  return QParams(bits, alpha, alpha / qmax_for(bits));
}

QParams QParams::from_scale(int bits, double scale) {
  purity::record_float_op("QParams::from_scale");
  check_bits(bits);
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw InvalidArgument("scale must be finite and positive, got " + std::to_string(scale));
  }
  return QParams(bits, scale * qmax_for(bits), scale);
}

int32_t QParams::qmax() const noexcept { return qmax_for(bits_); }

int32_t QParams::qmin() const noexcept {
  return bits_ == 8 ? -128 : std::numeric_limits<int32_t>::min();
}

QTensor::QTensor(std::vector<int32_t> data, QParams params, std::vector<std::size_t> shape)
    : data_(std::move(data)), params_(params), shape_(std::move(shape)) {
  if (shape_.empty()) shape_ = {data_.size()};
  std::size_t n = 1;
  for (auto d : shape_) n *= d;
  if (n != data_.size()) {
    throw InvalidArgument("QTensor: shape holds " + std::to_string(n) + " elements, payload has " +
                          std::to_string(data_.size()));
  }
  if (params_.bits() == 8) {
    for (int32_t v : data_) {
      if (v < params_.qmin() || v > params_.qmax()) {
        throw InvalidArgument("QTensor: value " + std::to_string(v) + " outside the 8-bit range");
      }
    }
  }
}

int32_t quantize_value(double x, const QParams& params) {
  if (!std::isfinite(x)) throw InvalidData("quantize: non-finite input");
  const double clipped = std::clamp(x, -params.alpha(), params.alpha());
  const double q = std::round(clipped / params.scale());
  const double limit = params.qmax();
  return static_cast<int32_t>(std::clamp(q, -limit, limit));
}

QTensor quantize(std::span<const double> x, const QParams& params, std::vector<std::size_t> shape) {
  purity::record_float_op("quantize");
  std::vector<int32_t> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) q[i] = quantize_value(x[i], params);
  return QTensor(std::move(q), params, std::move(shape));
}

std::vector<double> dequantize(const QTensor& t) {
  purity::record_float_op("dequantize");
  std::vector<double> out(t.size());
  const double s = t.scale();
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = s * t.data()[i];
  return out;
}

kernels::RequantPlan make_multiplier(double multiplier) {
  purity::record_float_op("make_multiplier");
  if (!std::isfinite(multiplier) || multiplier <= 0.0) {
    throw InvalidArgument("requantization multiplier must be finite and positive");
  }
  int exponent = 0;
  const double fraction = std::frexp(multiplier, &exponent);  // [0.5, 1)
  auto mantissa = static_cast<int64_t>(std::llround(std::ldexp(fraction, 31)));
  if (mantissa == (int64_t{1} << 31)) {
    mantissa >>= 1;
    ++exponent;
  }
  kernels::RequantPlan plan;
  plan.mantissa = static_cast<int32_t>(mantissa);
  plan.shift = 31 - exponent;
  return plan;
}

kernels::RequantPlan make_requantizer(double in_scale, const QParams& out, double fold) {
  if (!(in_scale > 0.0) || !(fold > 0.0)) {
    throw InvalidArgument("requantize: input scale and fold factor must be positive");
  }
  auto plan = make_multiplier(in_scale * fold / out.scale());
  plan.lo = -out.qmax();
  plan.hi = out.qmax();
  return plan;
}

QTensor requantize(const QTensor& t, const QParams& out, double fold) {
  const auto plan = make_requantizer(t.scale(), out, fold);
  std::vector<int32_t> q(t.size());
  kernels::requantize(t.data(), q, plan);
  return QTensor(std::move(q), out, t.shape());
}

QParams calibrate(std::span<const double> samples, int bits, const CalibrationOptions& options) {
  purity::record_float_op("calibrate");
  if (samples.empty()) throw InvalidArgument("calibrate: empty sample set");
  std::vector<double> mags(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) throw InvalidData("calibrate: non-finite sample");
    mags[i] = std::fabs(samples[i]);
  }
  double alpha = 0.0;
  if (options.method == CalibrationMethod::kMaxAbs) {
    alpha = *std::max_element(mags.begin(), mags.end());
  } else {
    if (!(options.percentile > 0.0 && options.percentile <= 100.0)) {
      throw InvalidArgument("calibrate: percentile must lie in (0, 100]");
    }
    const auto n = mags.size();
    auto rank = static_cast<std::size_t>(std::ceil(options.percentile / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, n) - 1;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(rank), mags.end());
    alpha = mags[rank];
  }
  if (alpha <= 0.0) {
    throw InvalidArgument("calibrate: all-zero activations cannot define a scale");
  }
  return QParams::from_alpha(bits, alpha);
}

QParams calibrate(std::span<const std::vector<double>> samples, int bits,
                  const CalibrationOptions& options) {
  std::vector<double> flat;
  for (const auto& s : samples) flat.insert(flat.end(), s.begin(), s.end());
  return calibrate(std::span<const double>(flat), bits, options);
}

}  // namespace intq

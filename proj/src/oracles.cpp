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

#include "intq/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>

#include "intq/error.hpp"
#include "intq/nonlinear.hpp"
#include "intq/purity.hpp"
#include "intq/quant.hpp"

namespace intq {

double oracle_erf(double x) {
  purity::record_float_op("oracle_erf");
  return std::erf(x);
}

double oracle_gelu(double x) {
  purity::record_float_op("oracle_gelu");
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double oracle_exp(double x) {
  purity::record_float_op("oracle_exp");
  return std::exp(x);
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

std::vector<double> oracle_softmax(std::span<const double> v) {
  purity::record_float_op("oracle_softmax");
  if (v.empty()) return {};
  const double m = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (auto& o : out) o /= sum;
  return out;
}

std::vector<double> oracle_layernorm(std::span<const double> v, double eps) {
  purity::record_float_op("oracle_layernorm");
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= n;
  const double denom = std::sqrt(var + eps);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = denom > 0.0 ? (v[i] - mean) / denom : 0.0;
  return out;
}

double sigmoid_gelu(double x) {
  purity::record_float_op("sigmoid_gelu");
  return x / (1.0 + std::exp(-1.702 * x));
}

double h_gelu_real(double x) {
  purity::record_float_op("h_gelu_real");
  return x * std::clamp(1.702 * x + 3.0, 0.0, 6.0) / 6.0;
}

double i_erf_real(double x) {
  purity::record_float_op("i_erf_real");
  constexpr double a = GeluConstants::a;
  constexpr double b = GeluConstants::b;
  const double s = (x > 0) - (x < 0);
  const double t = std::min(std::fabs(x), -b) + b;
  return s * (a * t * t + GeluConstants::c);
}

double i_gelu_real(double x) { return 0.5 * x * (1.0 + i_erf_real(x / std::numbers::sqrt2)); }

double i_exp_real(double x) {
  purity::record_float_op("i_exp_real");
  if (x > 0.0) throw InvalidArgument("i_exp_real: input must be non-positive");
  const double z = std::floor(-x / ExpConstants::ln2);
  const double p = x + z * ExpConstants::ln2;
  return ExpConstants::coeffs()(p) * std::exp2(-z);
}

std::function<double(double)> quantized_i_gelu(int bits, double alpha) {
  const auto params = QParams::from_alpha(bits, alpha);
  const auto kernel = compile_gelu(params.scale(), params.qmax());
  return [params, kernel](double x) {
    const int32_t q = quantize_value(x, params);
    const auto r = run(kernel, std::span<const int32_t>(&q, 1), OverflowPolicy::kTrap);
    return r.scale * r.q[0];
  };
}

std::function<double(double)> quantized_h_gelu(int bits, double alpha) {
  const auto params = QParams::from_alpha(bits, alpha);
  const auto kernel = compile_h_gelu(params.scale());
  return [params, kernel](double x) {
    const int32_t q = quantize_value(x, params);
    const auto r = run(kernel, std::span<const int32_t>(&q, 1), OverflowPolicy::kTrap);
    return r.scale * r.q[0];
  };
}

std::function<double(double)> quantized_i_exp(double scale) {
  const auto kernel = compile_exp(scale);
  return [scale, kernel](double x) {
    const auto q = static_cast<int32_t>(std::round(x / scale));
    const auto r = run(kernel, std::span<const int32_t>(&q, 1), OverflowPolicy::kTrap);
    return r.scale * r.q[0];
  };
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n_points) {
  if (!(lo < hi) || n_points < 2) {
    throw InvalidArgument("grid needs lo < hi and at least 2 points");
  }
  std::vector<double> xs(n_points);
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) xs[i] = lo + step * static_cast<double>(i);
  xs.back() = hi;
  return xs;
}

ErrorReport error_report(const std::function<double(double)>& approx,
                         const std::function<double(double)>& oracle, double lo, double hi,
                         std::size_t n_points) {
  purity::record_float_op("error_report");
  const auto xs = uniform_grid(lo, hi, n_points);
  ErrorReport r;
  r.lo = lo;
  r.hi = hi;
  r.n_points = n_points;
  double sum_sq = 0.0;
  for (double x : xs) {
    const double a = approx(x);
    const double o = oracle(x);
    if (!std::isfinite(a) || !std::isfinite(o)) {
      throw InvalidData("error_report: non-finite evaluation at x = " + std::to_string(x));
    }
    const double d = std::fabs(a - o);
    sum_sq += d * d;
    if (d > r.linf) {
      r.linf = d;
      r.argmax = x;
    }
  }
  r.l2 = std::sqrt(sum_sq / static_cast<double>(n_points));
  return r;
}

std::optional<NamedFunction> named_function(std::string_view name, double int8_alpha) {
  using F = std::function<double(double)>;
  F f;
  if (name == "relu") f = relu;
  else if (name == "gelu") f = oracle_gelu;
  else if (name == "sigmoid_gelu") f = sigmoid_gelu;
  else if (name == "h_gelu") f = h_gelu_real;
  else if (name == "i_gelu") f = i_gelu_real;
  else if (name == "erf") f = oracle_erf;
  else if (name == "i_erf") f = i_erf_real;
  else if (name == "exp") f = oracle_exp;
  else if (name == "i_exp") f = i_exp_real;
  else if (name == "i_gelu_int8") f = quantized_i_gelu(8, int8_alpha);
  else if (name == "h_gelu_int8") f = quantized_h_gelu(8, int8_alpha);
  else return std::nullopt;
  return NamedFunction{std::string(name), std::move(f)};
}

CurveTable curve_dump(std::span<const NamedFunction> functions, double lo, double hi,
                      std::size_t n_points) {
  purity::record_float_op("curve_dump");
  CurveTable t;
  t.header.push_back("x");
  for (const auto& f : functions) t.header.push_back(f.name);
  for (double x : uniform_grid(lo, hi, n_points)) {
    std::vector<double> row{x};
    for (const auto& f : functions) row.push_back(f.f(x));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(std::ostream& out, const CurveTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  char buf[40];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace intq

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

// Double-precision references, the real-arithmetic forms of the polynomial
// approximations, and the error metrics used to compare them.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace intq {

double oracle_erf(double x);
double oracle_gelu(double x);
double oracle_exp(double x);
double relu(double x);
std::vector<double> oracle_softmax(std::span<const double> v);
// (x - mu) / sqrt(var + eps), population variance.
std::vector<double> oracle_layernorm(std::span<const double> v, double eps = 0.0);

// x * sigmoid(1.702 x)
double sigmoid_gelu(double x);
// x * ReLU6(1.702 x + 3) / 6
double h_gelu_real(double x);
// The clipped erf polynomial and i-GELU evaluated in real arithmetic.
double i_erf_real(double x);
double i_gelu_real(double x);
// L(p) * 2^-z with x = -z ln2 + p, p in (-ln2, 0]. x must be <= 0.
double i_exp_real(double x);

// Integer kernels wrapped as real functions: quantize x with the given
// parameters, run the kernel, dequantize.
std::function<double(double)> quantized_i_gelu(int bits, double alpha);
std::function<double(double)> quantized_h_gelu(int bits, double alpha);
// Exp input is quantized at `scale` directly (32-bit role).
std::function<double(double)> quantized_i_exp(double scale);

struct ErrorReport {
  double l2 = 0.0;    // root mean square deviation over the grid
  double linf = 0.0;  // max absolute deviation
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_points = 0;
  double argmax = 0.0;  // where linf is attained
};

inline constexpr std::size_t kDefaultGridPoints = 8001;

// Inclusive uniform grid.
std::vector<double> uniform_grid(double lo, double hi, std::size_t n_points);

// Throws InvalidArgument for lo >= hi or n_points < 2, InvalidData (naming
// x) if either function is not finite on the grid.
ErrorReport error_report(const std::function<double(double)>& approx,
                         const std::function<double(double)>& oracle, double lo, double hi,
                         std::size_t n_points = kDefaultGridPoints);

struct NamedFunction {
  std::string name;
  std::function<double(double)> f;
};

// Known names: relu, gelu, sigmoid_gelu, h_gelu, i_gelu, erf, i_erf, exp,
// i_exp, i_gelu_int8, h_gelu_int8. The int8 variants quantize with
// alpha = `int8_alpha`.
std::optional<NamedFunction> named_function(std::string_view name, double int8_alpha = 4.0);

struct CurveTable {
  std::vector<std::string> header;  // "x" followed by function names
  std::vector<std::vector<double>> rows;
};

CurveTable curve_dump(std::span<const NamedFunction> functions, double lo, double hi,
                      std::size_t n_points);

// Header row then one row per grid point, 17 significant digits.
void write_csv(std::ostream& out, const CurveTable& table);

}  // namespace intq

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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "intq/error.hpp"
#include "intq/kernels.hpp"

namespace intq {

// a * (x + b)^2 + c
struct PolyCoeffs {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double x) const noexcept { return a * (x + b) * (x + b) + c; }
};

// Integer form of a PolyCoeffs compiled for one input scale.
struct IntPoly {
  int32_t q_b = 0;     // floor(b / S)
  int32_t q_c = 0;     // floor(c / (a S^2))
  double s_out = 1.0;  // a S^2, kept exact (no floor)
  double s_in = 1.0;

  kernels::PolyPlan plan() const noexcept { return {q_b, q_c}; }
};

// Integer values with the real scale they are read at.
struct IntResult {
  std::vector<int32_t> q;
  double scale = 1.0;
};

// Offline compilation. If max_abs_q is given, verifies that (q + q_b)^2 + q_c
// stays inside int32 for every |q| <= max_abs_q and throws InvalidArgument
// otherwise. Throws InvalidArgument for a == 0 or a non-positive scale.
IntPoly compile_poly(const PolyCoeffs& coeffs, double s_in,
                     std::optional<int64_t> max_abs_q = std::nullopt);

IntResult i_poly(std::span<const int32_t> q, const IntPoly& poly,
                 OverflowPolicy policy = kDefaultOverflowPolicy);

// |a| S (S + 2 |S q + b|) + |a| S^2: how far S_out * i_poly(q) may sit from
// the real polynomial at x = S q, given the two floors in compile_poly.
double floor_error_bound(const PolyCoeffs& coeffs, double s_in, int64_t q) noexcept;

// ---------------------------------------------------------------------------
// Lagrange interpolation.

struct InterpPoint {
  double x = 0.0;
  double f = 0.0;
};

class InterpolatingPoly {
 public:
  explicit InterpolatingPoly(std::vector<InterpPoint> points);

  const std::vector<InterpPoint>& points() const noexcept { return points_; }
  // Monomial coefficients, lowest degree first.
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  int degree() const noexcept { return static_cast<int>(points_.size()) - 1; }

  // Evaluates the Lagrange form sum_i f_i l_i(x).
  double operator()(double x) const noexcept;

 private:
  std::vector<InterpPoint> points_;
  std::vector<double> coefficients_;
};

// Throws InvalidArgument on an empty set or duplicate abscissae.
InterpolatingPoly lagrange_fit(std::span<const InterpPoint> points);

// max |f^(n+1)| / (n+1)! * prod |x - x_i|, n + 1 = nodes.size().
double interp_error_bound(double deriv_bound, std::span<const double> nodes, double x);

struct NodeSearchResult {
  InterpolatingPoly poly;
  double linf = 0.0;
};

// Grid search over increasing triples of nodes drawn from `candidates`
// equally spaced abscissae on [lo, hi], scoring each quadratic interpolant by
// its max deviation from f on `eval_points` grid points.
NodeSearchResult search_quadratic_nodes(const std::function<double(double)>& f, double lo,
                                        double hi, int candidates = 41, int eval_points = 1001);

// ---------------------------------------------------------------------------
// Least-squares fitting.

struct FitInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool lo_open = false;
  bool hi_open = false;
};

// Uniform fitting grid; an open endpoint is inset by half a step.
std::vector<double> fit_grid(const FitInterval& interval, std::size_t n_points);

inline constexpr std::size_t kDefaultFitPoints = 10001;

// Coefficients of a(x+b)^2+c minimising the discrete L2 distance from f on
// fit_grid(interval, n_points). Throws InvalidArgument for an empty interval
// or fewer than 3 points, InvalidData if f is not finite on the grid, and
// InvalidArgument when the best fit is linear (a == 0).
PolyCoeffs lsq_fit_quadratic(const std::function<double(double)>& f, const FitInterval& interval,
                             std::size_t n_points = kDefaultFitPoints);

// Erf polynomial for GELU: minimises
//   sum_x (GELU(x) - x/2 [1 + sgn(u) (a (min(|u|, -b) + b)^2 + 1)])^2,  u = x/sqrt(2)
// over a uniform grid on [lo, hi], with c fixed at 1. For fixed b the optimum
// in a is closed form; b is found by scan plus golden-section refinement.
PolyCoeffs fit_erf_for_gelu(double lo = -4.0, double hi = 4.0, std::size_t n_points = 8001);

}  // namespace intq

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

#include "intq/poly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "intq/purity.hpp"

namespace intq {
namespace {

constexpr double kInt32Max = std::numeric_limits<int32_t>::max();
constexpr double kInt32Min = std::numeric_limits<int32_t>::min();

int32_t checked_floor(double v, const char* what) {
  const double f = std::floor(v);
  if (!std::isfinite(f) || f > kInt32Max || f < kInt32Min) {
    throw InvalidArgument(std::string("compile_poly: ") + what + " does not fit in int32");
  }
  return static_cast<int32_t>(f);
}

// Solves the 3x3 system m * x = rhs by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> rhs) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    if (m[pivot][col] == 0.0) throw InvalidArgument("lsq_fit_quadratic: singular normal equations");
    std::swap(m[pivot], m[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double factor = m[r][col] / m[col][col];
      for (int k = col; k < 3; ++k) m[r][k] -= factor * m[col][k];
      rhs[r] -= factor * rhs[col];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = rhs[r];
    for (int k = r + 1; k < 3; ++k) s -= m[r][k] * x[k];
    x[r] = s / m[r][r];
  }
  return x;
}

double gelu_exact(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

IntPoly compile_poly(const PolyCoeffs& coeffs, double s_in, std::optional<int64_t> max_abs_q) {
  purity::record_float_op("compile_poly");
  if (coeffs.a == 0.0) throw InvalidArgument("compile_poly: degenerate polynomial (a == 0)");
  if (!(s_in > 0.0) || !std::isfinite(s_in)) {
    throw InvalidArgument("compile_poly: input scale must be finite and positive");
  }
  IntPoly p;
  p.s_in = s_in;
  p.s_out = coeffs.a * s_in * s_in;
  p.q_b = checked_floor(coeffs.b / s_in, "q_b");
  p.q_c = checked_floor(coeffs.c / p.s_out, "q_c");

  if (max_abs_q) {
    const auto m = static_cast<double>(*max_abs_q);
    const double lo_end = std::fabs(-m + p.q_b);
    const double hi_end = std::fabs(m + p.q_b);
    const double largest = std::max(lo_end, hi_end) * std::max(lo_end, hi_end) + p.q_c;
    const bool vertex_inside = -p.q_b >= -m && -p.q_b <= m;
    const double nearest = vertex_inside ? 0.0 : std::min(lo_end, hi_end);
    const double smallest = nearest * nearest + p.q_c;
    if (largest > kInt32Max || smallest < kInt32Min) {
      throw InvalidArgument("compile_poly: (q + q_b)^2 + q_c overflows int32 for |q| <= " +
                            std::to_string(*max_abs_q));
    }
  }
  return p;
}

IntResult i_poly(std::span<const int32_t> q, const IntPoly& poly, OverflowPolicy policy) {
  IntResult r;
  r.q.resize(q.size());
  r.scale = poly.s_out;
  kernels::i_poly(q, r.q, poly.plan(), policy);
  return r;
}

double floor_error_bound(const PolyCoeffs& coeffs, double s_in, int64_t q) noexcept {
  const double a = std::fabs(coeffs.a);
  const double x = s_in * static_cast<double>(q);
  return a * s_in * (s_in + 2.0 * std::fabs(x + coeffs.b)) + a * s_in * s_in;
}

// ---------------------------------------------------------------------------

InterpolatingPoly::InterpolatingPoly(std::vector<InterpPoint> points)
    : points_(std::move(points)) {
  const std::size_t n = points_.size();
  coefficients_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Expand l_i(x) = prod_{j != i} (x - x_j) / (x_i - x_j).
    std::vector<double> basis{1.0};
    double denom = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<double> next(basis.size() + 1, 0.0);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        next[k] -= points_[j].x * basis[k];
        next[k + 1] += basis[k];
      }
      basis = std::move(next);
      denom *= points_[i].x - points_[j].x;
    }
    for (std::size_t k = 0; k < basis.size(); ++k) {
      coefficients_[k] += points_[i].f * basis[k] / denom;
    }
  }
}

double InterpolatingPoly::operator()(double x) const noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < points_.size(); ++j) {
      if (j != i) l *= (x - points_[j].x) / (points_[i].x - points_[j].x);
    }
    sum += points_[i].f * l;
  }
  return sum;
}

InterpolatingPoly lagrange_fit(std::span<const InterpPoint> points) {
  purity::record_float_op("lagrange_fit");
  if (points.empty()) throw InvalidArgument("lagrange_fit: no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].f)) {
      throw InvalidData("lagrange_fit: non-finite point");
    }
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].x == points[j].x) {
        throw InvalidArgument("lagrange_fit: duplicate abscissa " + std::to_string(points[i].x));
      }
    }
  }
  return InterpolatingPoly({points.begin(), points.end()});
}

double interp_error_bound(double deriv_bound, std::span<const double> nodes, double x) {
  double factorial = 1.0;
  double product = 1.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    factorial *= static_cast<double>(i + 1);
    product *= std::fabs(x - nodes[i]);
  }
  return deriv_bound / factorial * product;
}

NodeSearchResult search_quadratic_nodes(const std::function<double(double)>& f, double lo,
                                        double hi, int candidates, int eval_points) {
  purity::record_float_op("search_quadratic_nodes");
  if (!(lo < hi) || candidates < 3 || eval_points < 2) {
    throw InvalidArgument("search_quadratic_nodes: bad interval or grid");
  }
  std::vector<double> xs(static_cast<std::size_t>(candidates));
  std::vector<double> fx(xs.size());
  for (int i = 0; i < candidates; ++i) {
    xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (candidates - 1);
    fx[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
  }
  std::vector<double> ex(static_cast<std::size_t>(eval_points));
  std::vector<double> fe(ex.size());
  for (int i = 0; i < eval_points; ++i) {
    ex[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (eval_points - 1);
    fe[static_cast<std::size_t>(i)] = f(ex[static_cast<std::size_t>(i)]);
  }

  double best = std::numeric_limits<double>::infinity();
  std::array<std::size_t, 3> best_idx{0, 1, 2};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      for (std::size_t k = j + 1; k < xs.size(); ++k) {
        const std::array<InterpPoint, 3> pts{{{xs[i], fx[i]}, {xs[j], fx[j]}, {xs[k], fx[k]}}};
        const InterpolatingPoly p({pts.begin(), pts.end()});
        double worst = 0.0;
        for (std::size_t e = 0; e < ex.size() && worst < best; ++e) {
          worst = std::max(worst, std::fabs(p(ex[e]) - fe[e]));
        }
        if (worst < best) {
          best = worst;
          best_idx = {i, j, k};
        }
      }
    }
  }
  std::vector<InterpPoint> pts;
  for (auto i : best_idx) pts.push_back({xs[i], fx[i]});
  return {InterpolatingPoly(std::move(pts)), best};
}

// ---------------------------------------------------------------------------

std::vector<double> fit_grid(const FitInterval& interval, std::size_t n_points) {
  if (!(interval.lo < interval.hi) || n_points < 2) {
    throw InvalidArgument("fit_grid: need lo < hi and at least 2 points");
  }
  const double span = interval.hi - interval.lo;
  const double n = static_cast<double>(n_points);
  const double open_ends = (interval.lo_open ? 0.5 : 0.0) + (interval.hi_open ? 0.5 : 0.0);
  const double step = span / (n - 1.0 + open_ends);
  const double start = interval.lo + (interval.lo_open ? 0.5 * step : 0.0);
  std::vector<double> xs(n_points);
  for (std::size_t i = 0; i < n_points; ++i) xs[i] = start + step * static_cast<double>(i);
  if (!interval.hi_open) xs.back() = interval.hi;
  return xs;
}

PolyCoeffs lsq_fit_quadratic(const std::function<double(double)>& f, const FitInterval& interval,
                             std::size_t n_points) {
  purity::record_float_op("lsq_fit_quadratic");
  if (n_points < 3) throw InvalidArgument("lsq_fit_quadratic: need at least 3 grid points");
  const auto xs = fit_grid(interval, n_points);
  const double mid = 0.5 * (interval.lo + interval.hi);
  const double half = 0.5 * (interval.hi - interval.lo);

  // Normal equations in t = (x - mid) / half for conditioning.
  std::array<double, 5> moments{};
  std::array<double, 3> rhs{};
  for (double x : xs) {
    const double y = f(x);
    if (!std::isfinite(y)) {
      throw InvalidData("lsq_fit_quadratic: f is not finite at x = " + std::to_string(x));
    }
    const double t = (x - mid) / half;
    double tk = 1.0;
    for (int k = 0; k < 5; ++k) {
      moments[static_cast<std::size_t>(k)] += tk;
      if (k < 3) rhs[static_cast<std::size_t>(k)] += y * tk;
      tk *= t;
    }
  }
  std::array<std::array<double, 3>, 3> m{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          moments[static_cast<std::size_t>(r + c)];
    }
  }
  const auto t_coef = solve3(m, rhs);  // c0 + c1 t + c2 t^2

  const double c2 = t_coef[2] / (half * half);
  const double size = std::fabs(t_coef[0]) + std::fabs(t_coef[1]) + std::fabs(t_coef[2]);
  if (!std::isfinite(c2) || std::fabs(t_coef[2]) <= 1e-12 * size) {
    throw InvalidArgument("lsq_fit_quadratic: best fit is not a proper quadratic");
  }
  // Vertex form: a (x - v)^2 + c with v = mid - c1 half / (2 c2_t).
  const double vertex = mid - t_coef[1] * half / (2.0 * t_coef[2]);
  PolyCoeffs out;
  out.a = c2;
  out.b = -vertex;
  out.c = t_coef[0] - t_coef[1] * t_coef[1] / (4.0 * t_coef[2]);
  return out;
}

PolyCoeffs fit_erf_for_gelu(double lo, double hi, std::size_t n_points) {
  purity::record_float_op("fit_erf_for_gelu");
  const auto xs = fit_grid({lo, hi, false, false}, n_points);
  std::vector<double> target(xs.size());
  std::vector<double> sgn(xs.size());
  std::vector<double> mag(xs.size());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = xs[i] * inv_sqrt2;
    sgn[i] = (u > 0) - (u < 0);
    mag[i] = std::fabs(u);
    // Residual the polynomial term must explain: GELU(x) - x/2 (1 + sgn(u)).
    target[i] = gelu_exact(xs[i]) - 0.5 * xs[i] * (1.0 + sgn[i]);
  }

  // For clip point beta = -b, the model term is a * phi(x).
  auto solve_a = [&](double beta, double* objective) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = std::min(mag[i], beta) - beta;
      const double phi = 0.5 * xs[i] * sgn[i] * d * d;
      num += phi * target[i];
      den += phi * phi;
    }
    const double a = num / den;
    if (objective) {
      double j = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = std::min(mag[i], beta) - beta;
        const double r = a * 0.5 * xs[i] * sgn[i] * d * d - target[i];
        j += r * r;
      }
      *objective = j;
    }
    return a;
  };

  constexpr double kBetaLo = 0.5;
  constexpr double kBetaHi = 4.0;
  constexpr int kScan = 351;
  double best_beta = kBetaLo;
  double best_j = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double beta = kBetaLo + (kBetaHi - kBetaLo) * i / (kScan - 1);
    double j = 0.0;
    solve_a(beta, &j);
    if (j < best_j) {
      best_j = j;
      best_beta = beta;
    }
  }
  const double step = (kBetaHi - kBetaLo) / (kScan - 1);
  double left = std::max(kBetaLo, best_beta - step);
  double right = std::min(kBetaHi, best_beta + step);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = right - ratio * (right - left);
  double x2 = left + ratio * (right - left);
  double j1 = 0.0;
  double j2 = 0.0;
  solve_a(x1, &j1);
  solve_a(x2, &j2);
  for (int it = 0; it < 100 && right - left > 1e-12; ++it) {
    if (j1 < j2) {
      right = x2;
      x2 = x1;
      j2 = j1;
      x1 = right - ratio * (right - left);
      solve_a(x1, &j1);
    } else {
      left = x1;
      x1 = x2;
      j1 = j2;
      x2 = left + ratio * (right - left);
      solve_a(x2, &j2);
    }
  }
  const double beta = 0.5 * (left + right);
  return {solve_a(beta, nullptr), -beta, 1.0};
}

}  // namespace intq

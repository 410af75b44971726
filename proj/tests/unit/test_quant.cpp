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

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "intq/quant.hpp"

using namespace intq;

namespace {

// Scalar oracle: ties away from zero in extended precision.
long double round_away(long double v) {
  const long double f = std::floor(std::fabs(v));
  const long double r = std::fabs(v) - f >= 0.5L ? f + 1 : f;
  return v < 0 ? -r : r;
}

long double quantize_oracle(long double x, long double alpha, int bits) {
  const long double qmax = bits == 8 ? 127.0L : 2147483647.0L;
  const long double s = alpha / qmax;
  x = std::min(std::max(x, -alpha), alpha);
  return round_away(x / s);
}

}  // namespace

TEST_CASE("qparams scale and validation") {
  const auto p = QParams::from_alpha(8, 2.0);
  CHECK(p.bits() == 8);
  CHECK(p.scale() == doctest::Approx(2.0 / 127));
  CHECK(std::fabs(p.scale() * 127 - p.alpha()) <= std::nextafter(2.0, 3.0) - 2.0);
  CHECK(p.qmax() == 127);
  CHECK(p.qmin() == -128);

  const auto w = QParams::from_alpha(32, 1.0);
  CHECK(w.qmax() == std::numeric_limits<int32_t>::max());

  CHECK_THROWS_AS(QParams::from_alpha(16, 1.0), InvalidArgument);
  CHECK_THROWS_AS(QParams::from_alpha(8, 0.0), InvalidArgument);
  CHECK_THROWS_AS(QParams::from_alpha(8, -1.0), InvalidArgument);
  CHECK_THROWS_AS(QParams::from_alpha(8, std::numeric_limits<double>::infinity()), InvalidArgument);
  CHECK_THROWS_AS(QParams::from_scale(8, 0.0), InvalidArgument);
}

TEST_CASE("quantize frozen values") {
  const auto p = QParams::from_alpha(8, 2.0);
  CHECK(quantize_value(0.0, p) == 0);
  CHECK(quantize_value(2.0, p) == 127);
  CHECK(quantize_value(-2.0, p) == -127);
  // round(63.5) with ties away from zero.
  CHECK(quantize_value(1.0, p) == 64);
  CHECK(quantize_value(1.0, p) == static_cast<int32_t>(quantize_oracle(1.0L, 2.0L, 8)));
  CHECK(quantize_value(-1.0, p) == -64);
  CHECK(quantize_value(100.0, p) == 127);
}

TEST_CASE("quantize rejects non-finite data") {
  const auto p = QParams::from_alpha(8, 1.0);
  const std::vector<double> x{0.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(quantize(x, p), InvalidData);
  const std::vector<double> y{std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(quantize(y, p), InvalidData);
}

TEST_CASE("qtensor checks shape and range") {
  const auto p = QParams::from_alpha(8, 1.0);
  CHECK_THROWS_AS(QTensor({1, 2, 3}, p, {2, 2}), InvalidArgument);
  CHECK_THROWS_AS(QTensor({128}, p), InvalidArgument);
  CHECK_THROWS_AS(QTensor({-129}, p), InvalidArgument);
  const QTensor t({-128, 127, 0, 5}, p, {2, 2});
  CHECK(t.size() == 4);
  CHECK(t.shape() == std::vector<std::size_t>{2, 2});
}

TEST_CASE("dequantize is exact scaling") {
  const auto p = QParams::from_alpha(8, 2.0);
  const QTensor t({0, 127, -5}, p);
  const auto x = dequantize(t);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(x[2] == p.scale() * -5);
}

TEST_CASE("round trip, clipping and symmetry properties") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ua(1e-3, 100.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 200000; ++i) {
    const double alpha = ua(rng);
    const auto p = QParams::from_alpha(8, alpha);
    const double x = alpha * u(rng);
    const int32_t q = quantize_value(x, p);
    if (std::fabs(p.scale() * q - x) > p.scale() / 2 * (1 + 1e-12)) ++violations;
    if (q != static_cast<int32_t>(quantize_oracle(x, alpha, 8))) ++violations;
    if (std::abs(quantize_value(-x, p) + q) > 1) ++violations;
    const double big = alpha * (1.0 + std::fabs(u(rng)) + 1e-9);
    if (quantize_value(big, p) != quantize_value(alpha, p)) ++violations;
    if (quantize_value(-big, p) != quantize_value(-alpha, p)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("requantize frozen values") {
  const auto in = QParams::from_scale(32, 0.5);
  const auto out = QParams::from_scale(8, 1.0);
  CHECK(requantize(QTensor({250}, in), out).data()[0] == 125);
  CHECK(requantize(QTensor({0}, in), out).data()[0] == 0);
  // 250 * 0.5 / 1.0 = 125 fits; 300 clips.
  CHECK(requantize(QTensor({300}, in), out).data()[0] == 127);
  CHECK(requantize(QTensor({-300}, in), out).data()[0] == -127);

  const auto same = QParams::from_scale(32, 0.125);
  CHECK(requantize(QTensor({100}, same), QParams::from_scale(8, 0.125)).data()[0] == 100);
}

TEST_CASE("requantize rejects bad multipliers") {
  CHECK_THROWS_AS(make_multiplier(0.0), InvalidArgument);
  CHECK_THROWS_AS(make_multiplier(-1.0), InvalidArgument);
  CHECK_THROWS_AS(make_multiplier(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
}

TEST_CASE("dyadic multiplier shape") {
  for (double m : {1e-9, 0.001, 0.37, 0.5, 1.0, 1.7, 3.0, 1000.0, 123456.0}) {
    const auto plan = make_multiplier(m);
    CHECK(plan.mantissa >= (1 << 30));
    CHECK(int64_t{plan.mantissa} < (int64_t{1} << 31));
    CHECK(std::ldexp(static_cast<double>(plan.mantissa), -plan.shift) ==
          doctest::Approx(m).epsilon(1e-9));
  }
}

TEST_CASE("requantize agrees with real-arithmetic oracle within one") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ulog(-8.0, 3.0);
  std::uniform_int_distribution<int32_t> uq(-(1 << 24), 1 << 24);
  int off_by_one = 0;
  int worse = 0;
  for (int t = 0; t < 100; ++t) {
    const double s_in = std::pow(10.0, ulog(rng));
    const double s_out = std::pow(10.0, ulog(rng));
    const auto plan = make_requantizer(s_in, QParams::from_scale(32, s_out));
    for (int i = 0; i < 10000; ++i) {
      const int32_t q = uq(rng);
      long double ref = round_away(static_cast<long double>(q) * s_in / s_out);
      ref = std::min<long double>(std::max<long double>(ref, -2147483647.0L), 2147483647.0L);
      const long double got = kernels::requantize_one(q, plan);
      const long double d = std::fabs(got - ref);
      if (d == 1) ++off_by_one;
      if (d > 1) ++worse;
    }
  }
  CHECK(worse == 0);
  MESSAGE("off-by-one results: " << off_by_one << " / 1000000");
}

TEST_CASE("requantize with fold") {
  const auto in = QParams::from_scale(32, 1.0);
  const auto out = QParams::from_scale(8, 1.0);
  CHECK(requantize(QTensor({100}, in), out, 0.25).data()[0] == 25);
}

TEST_CASE("calibrate") {
  const std::vector<double> s{-3.0, 1.0, 2.0};
  const auto p = calibrate(s, 8);
  CHECK(p.alpha() == 3.0);
  CHECK(p.scale() == doctest::Approx(3.0 / 127));

  const std::vector<double> zeros{0.0};
  CHECK_THROWS_AS(calibrate(zeros, 8), InvalidArgument);
  const std::vector<double> empty;
  CHECK_THROWS_AS(calibrate(empty, 8), InvalidArgument);
  const std::vector<std::vector<double>> none;
  CHECK_THROWS_AS(calibrate(std::span<const std::vector<double>>(none), 8), InvalidArgument);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(calibrate(bad, 8), InvalidData);

  std::mt19937_64 rng(0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> unif(100000);
  for (auto& v : unif) v = u(rng);
  CHECK(calibrate(unif, 8).scale() == doctest::Approx(1.0 / 127).epsilon(1e-3));

  const std::vector<std::vector<double>> batches{{-1.0, 0.5}, {4.0}};
  CHECK(calibrate(std::span<const std::vector<double>>(batches), 32).alpha() == 4.0);
}

TEST_CASE("percentile calibration clips outliers") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 10) / 10.0;
  v[3] = 1000.0;
  CalibrationOptions opt;
  opt.method = CalibrationMethod::kPercentile;
  opt.percentile = 99.0;
  const auto p = calibrate(v, 8, opt);
  CHECK(p.alpha() < 1.0);
  CHECK(calibrate(v, 8).alpha() == 1000.0);
  opt.percentile = 0.0;
  CHECK_THROWS_AS(calibrate(v, 8, opt), InvalidArgument);
}

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
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "intq/error.hpp"
#include "intq/oracles.hpp"

using namespace intq;

TEST_CASE("oracle asymptotics and fixed values") {
  CHECK(oracle_gelu(0.0) == 0.0);
  CHECK(std::fabs(oracle_gelu(-10.0)) < 1e-20);
  CHECK(oracle_gelu(10.0) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(oracle_gelu(3.0) == doctest::Approx(2.99595).epsilon(1e-5));
  CHECK(oracle_erf(1.0) == doctest::Approx(0.8427007929497149).epsilon(1e-15));
  const std::vector<double> z{0.0, 0.0};
  const auto sm = oracle_softmax(z);
  CHECK(sm[0] == 0.5);
  CHECK(sm[1] == 0.5);
  const std::vector<double> v{1.0, -1.0};
  const auto ln = oracle_layernorm(v);
  CHECK(ln[0] == doctest::Approx(1.0));
  CHECK(ln[1] == doctest::Approx(-1.0));
  CHECK(relu(-1.0) == 0.0);
  CHECK(relu(2.0) == 2.0);
}

TEST_CASE("real-arithmetic approximations") {
  CHECK(sigmoid_gelu(0.0) == 0.0);
  CHECK(h_gelu_real(0.0) == 0.0);
  CHECK(h_gelu_real(2.0) == 2.0);
  CHECK(h_gelu_real(-2.0) == 0.0);
  CHECK(i_erf_real(1.769) == doctest::Approx(1.0));
  CHECK(i_erf_real(-1.769) == doctest::Approx(-1.0));
  CHECK(i_erf_real(5.0) == i_erf_real(1.769));
  CHECK(i_exp_real(0.0) == doctest::Approx(1.00027).epsilon(1e-5));
  CHECK(i_exp_real(-std::log(2.0)) == doctest::Approx(0.5001).epsilon(1e-3));
  CHECK_THROWS_AS(i_exp_real(0.5), InvalidArgument);
}

TEST_CASE("error report basics") {
  const auto r0 = error_report(oracle_gelu, oracle_gelu, -4, 4);
  CHECK(r0.l2 == 0.0);
  CHECK(r0.linf == 0.0);
  CHECK(r0.n_points == kDefaultGridPoints);

  // Constant offset 0.5: both metrics are 0.5, regardless of sign.
  const auto up = error_report([](double x) { return x + 0.5; }, [](double x) { return x; }, 0, 1, 11);
  const auto down = error_report([](double x) { return x - 0.5; }, [](double x) { return x; }, 0, 1, 11);
  CHECK(up.l2 == doctest::Approx(0.5));
  CHECK(up.linf == doctest::Approx(0.5));
  CHECK(down.l2 == doctest::Approx(up.l2));
  CHECK(down.linf == doctest::Approx(up.linf));

  CHECK_THROWS_AS(error_report(relu, relu, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(error_report(relu, relu, 0, 1, 1), InvalidArgument);
  try {
    error_report([](double x) { return x > 0.5 ? std::numeric_limits<double>::infinity() : 0.0; },
                 relu, 0, 1, 3);
    FAIL("expected InvalidData");
  } catch (const InvalidData& e) {
    CHECK(std::string(e.what()).find("x = 1") != std::string::npos);
  }
}

TEST_CASE("table of GELU approximations") {
  const auto ig = error_report(i_gelu_real, oracle_gelu, -4, 4);
  const auto sg = error_report(sigmoid_gelu, oracle_gelu, -4, 4);
  const auto hg = error_report(h_gelu_real, oracle_gelu, -4, 4);
  MESSAGE("i-GELU " << ig.l2 << " " << ig.linf);
  MESSAGE("sigmoid-GELU " << sg.l2 << " " << sg.linf);
  MESSAGE("h-GELU " << hg.l2 << " " << hg.linf);
  CHECK(ig.linf < sg.linf);
  CHECK(sg.linf < hg.linf);
  CHECK(ig.l2 < sg.l2);
  CHECK(sg.l2 < hg.l2);

  // Grid refinement barely moves the maximum.
  const auto ig2 = error_report(i_gelu_real, oracle_gelu, -4, 4, 2 * kDefaultGridPoints - 1);
  CHECK(std::fabs(ig2.linf - ig.linf) < 1e-4);
  const auto hg2 = error_report(h_gelu_real, oracle_gelu, -4, 4, 2 * kDefaultGridPoints - 1);
  CHECK(std::fabs(hg2.linf - hg.linf) < 1e-4);
}

TEST_CASE("quantized variants run") {
  const auto f = quantized_i_gelu(8, 4.0);
  CHECK(f(0.0) == 0.0);
  CHECK(std::fabs(f(3.0) - oracle_gelu(3.0)) < 0.05);
  const auto h = quantized_h_gelu(8, 4.0);
  CHECK(h(0.0) == 0.0);
  const auto e = quantized_i_exp(1e-4);
  CHECK(e(0.0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("named functions and curve dump") {
  CHECK_FALSE(named_function("nope").has_value());
  std::vector<NamedFunction> fs;
  for (const char* n : {"relu", "gelu", "h_gelu", "i_gelu"}) fs.push_back(*named_function(n));
  const auto t = curve_dump(fs, -4, 4, 9);
  CHECK(t.header == std::vector<std::string>{"x", "relu", "gelu", "h_gelu", "i_gelu"});
  CHECK(t.rows.size() == 9);
  CHECK(t.rows[3][0] == -1.0);
  CHECK(t.rows[3][1] == 0.0);
  CHECK(t.rows[4][2] == 0.0);

  std::vector<NamedFunction> ex{*named_function("exp"), *named_function("i_exp")};
  const auto te = curve_dump(ex, -10, 0, 1001);
  double worst = 0;
  for (const auto& row : te.rows) worst = std::max(worst, std::fabs(row[1] - row[2]));
  MESSAGE("max |i-exp - exp| over the dumped exp curve: " << worst);
  CHECK(worst < 2.2e-3);

  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,relu,gelu,h_gelu,i_gelu");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    // Values survive the text round trip to far beyond 12 significant digits.
    std::istringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      CHECK(std::stod(cell) == t.rows[static_cast<std::size_t>(rows - 1)][col]);
      ++col;
    }
  }
  CHECK(rows == 9);
}

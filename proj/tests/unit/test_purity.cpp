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

#include <vector>

#include "doctest.h"
#include "intq/nonlinear.hpp"
#include "intq/purity.hpp"
#include "intq/quant.hpp"

using namespace intq;

TEST_CASE("kernel translation unit carries the register guard") {
  CHECK(purity::kernels_built_general_regs_only());
}

TEST_CASE("probe counts float touchpoints") {
  purity::Probe probe;
  CHECK(probe.count() == 0);
  const auto p = QParams::from_alpha(8, 1.0);
  const std::vector<double> x{0.5};
  const auto q = quantize(x, p);
  CHECK(probe.count() >= 2);
  CHECK_FALSE(probe.sites().empty());
}

TEST_CASE("compiled kernels run without float touchpoints") {
  const auto gelu = compile_gelu(1e-3, 5000);
  const auto sm = compile_softmax(1e-3);
  const auto ln = LayerNormParams::from_real(std::vector<double>{1.0, 2.0, 3.0},
                                             std::vector<double>{0.0, 0.1, 0.2});
  const std::vector<int32_t> q{-5000, 12, 4000};

  purity::Probe probe;
  const auto g = run(gelu, q, OverflowPolicy::kTrap);
  const auto s = run(sm, q, OverflowPolicy::kTrap);
  const auto n = i_layernorm(q, 1e-3, ln, OverflowPolicy::kTrap);
  const auto a = layernorm_affine(n, ln, OverflowPolicy::kTrap);
  std::vector<int32_t> out(q.size());
  kernels::requantize(q, out, kernels::RequantPlan{});
  CHECK(probe.count() == 0);
  CHECK(g.q.size() == 3);
  CHECK(s.q.size() == 3);
  CHECK(a.q.size() == 3);
}

TEST_CASE("compile steps are visible to the probe") {
  purity::Probe probe;
  (void)compile_exp(1e-3);
  CHECK(probe.count() > 0);
}

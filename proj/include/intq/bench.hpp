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

// Wall-clock medians of the integer kernels next to straightforward float
// implementations of the same operation.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace intq::bench {

inline constexpr int kMinRepetitions = 30;

struct BenchRow {
  std::string op;
  std::string size;
  double int_median_ns = 0.0;
  double float_median_ns = 0.0;
  double speedup = 0.0;  // float / int
};

// Known ops: gemm (size "MxKxN"), gelu and exp (size "N"), softmax and
// layernorm (size "RxC"). Throws InvalidArgument for an unknown op, a
// malformed size, or fewer than kMinRepetitions repetitions.
std::vector<BenchRow> microbench(std::string_view op, std::span<const std::string> sizes,
                                 int repetitions = kMinRepetitions, uint64_t seed = 0);

const std::vector<std::string>& known_ops();
std::vector<std::string> default_sizes(std::string_view op);

// op,size,int_median_ns,float_median_ns,speedup
void write_csv(std::ostream& os, std::span<const BenchRow> rows);

}  // namespace intq::bench

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

// INT8 x INT8 -> INT32 GEMM. Lives apart from int_kernels.cpp because the
// inner loop wants SIMD registers, which the general-regs-only guard forbids.
// The code is still integer-only.

#include <algorithm>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "intq/kernels.hpp"

namespace intq::kernels {
namespace {

// |a*b| <= 2^14, so depth below 2^17 cannot overflow an int32 accumulator.
constexpr int kInt32SafeDepth = 1 << 17;

int32_t dot_s8(const int8_t* a, const int8_t* b, int depth) {
  int32_t acc = 0;
  for (int k = 0; k < depth; ++k) acc += int32_t{a[k]} * int32_t{b[k]};
  return acc;
}

int64_t dot_s8_wide(const int8_t* a, const int8_t* b, int depth) {
  int64_t acc = 0;
  for (int k = 0; k < depth; ++k) acc += int32_t{a[k]} * int32_t{b[k]};
  return acc;
}

void gemm_rows(const int8_t* a, const int8_t* bt, const int32_t* bias, int32_t* out, int row_begin,
               int row_end, int depth, int cols, OverflowPolicy policy) {
  for (int i = row_begin; i < row_end; ++i) {
    const int8_t* arow = a + static_cast<std::size_t>(i) * depth;
    int32_t* orow = out + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) {
      const int8_t* bcol = bt + static_cast<std::size_t>(j) * depth;
      int64_t acc = depth < kInt32SafeDepth ? dot_s8(arow, bcol, depth)
                                            : dot_s8_wide(arow, bcol, depth);
      if (bias) acc += bias[j];
      orow[j] = narrow(acc, policy, "int_matmul");
    }
  }
}

}  // namespace

void gemm_s8s8s32(std::span<const int8_t> a, std::span<const int8_t> bt,
                  std::span<const int32_t> bias, std::span<int32_t> out, int rows, int depth,
                  int cols, OverflowPolicy policy, int threads) {
  if (rows < 0 || depth < 0 || cols < 0) throw InvalidArgument("int_matmul: negative dimension");
  const auto r = static_cast<std::size_t>(rows);
  const auto d = static_cast<std::size_t>(depth);
  const auto c = static_cast<std::size_t>(cols);
  if (a.size() != r * d || bt.size() != c * d || out.size() != r * c) {
    throw InvalidArgument("int_matmul: buffer sizes do not match " + std::to_string(rows) + "x" +
                          std::to_string(depth) + "x" + std::to_string(cols));
  }
  if (!bias.empty() && bias.size() != c) {
    throw InvalidArgument("int_matmul: bias length must equal output columns");
  }
  const int32_t* bias_ptr = bias.empty() ? nullptr : bias.data();

  threads = std::clamp(threads, 1, std::max(rows, 1));
  if (threads == 1) {
    gemm_rows(a.data(), bt.data(), bias_ptr, out.data(), 0, rows, depth, cols, policy);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  const int chunk = (rows + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, t, begin, end] {
      try {
        gemm_rows(a.data(), bt.data(), bias_ptr, out.data(), begin, end, depth, cols, policy);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace intq::kernels

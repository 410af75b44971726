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

#include "intq/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>

#include "intq/error.hpp"
#include "intq/nonlinear.hpp"

namespace intq::bench {
namespace {

volatile int64_t g_sink = 0;

std::vector<int> parse_size(std::string_view text, std::size_t parts) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('x', pos), text.size());
    int v = 0;
    const auto part = text.substr(pos, end - pos);
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() || v <= 0) {
      out.clear();
      break;
    }
    out.push_back(v);
    pos = end + 1;
  }
  if (out.size() != parts) {
    throw InvalidArgument("bad size '" + std::string(text) + "', expected " +
                          (parts == 1 ? std::string("N") : parts == 2 ? "RxC" : "MxKxN"));
  }
  return out;
}

double median_ns(const std::function<void()>& f, int reps) {
  f();  // warm-up
  std::vector<double> t(static_cast<std::size_t>(reps));
  for (auto& v : t) {
    const auto a = std::chrono::steady_clock::now();
    f();
    const auto b = std::chrono::steady_clock::now();
    v = std::chrono::duration<double, std::nano>(b - a).count();
  }
  std::nth_element(t.begin(), t.begin() + reps / 2, t.end());
  return t[static_cast<std::size_t>(reps / 2)];
}

struct Pair {
  std::function<void()> integer, floating;
};

Pair make_gemm(const std::vector<int>& s, std::mt19937_64& rng) {
  const int m = s[0], k = s[1], n = s[2];
  std::uniform_int_distribution<int> u(-127, 127);
  auto a = std::make_shared<std::vector<int8_t>>(static_cast<std::size_t>(m) * k);
  auto bt = std::make_shared<std::vector<int8_t>>(static_cast<std::size_t>(n) * k);
  for (auto& v : *a) v = static_cast<int8_t>(u(rng));
  for (auto& v : *bt) v = static_cast<int8_t>(u(rng));
  auto af = std::make_shared<std::vector<float>>(a->begin(), a->end());
  auto btf = std::make_shared<std::vector<float>>(bt->begin(), bt->end());
  auto out = std::make_shared<std::vector<int32_t>>(static_cast<std::size_t>(m) * n);
  auto outf = std::make_shared<std::vector<float>>(static_cast<std::size_t>(m) * n);
  return {[=] {
            kernels::gemm_s8s8s32(*a, *bt, {}, *out, m, k, n, OverflowPolicy::kSaturate);
            g_sink = (*out)[0];
          },
          [=] {
            for (int i = 0; i < m; ++i) {
              const float* ar = af->data() + static_cast<std::size_t>(i) * k;
              for (int j = 0; j < n; ++j) {
                const float* br = btf->data() + static_cast<std::size_t>(j) * k;
                float acc = 0.0f;
                for (int p = 0; p < k; ++p) acc += ar[p] * br[p];
                (*outf)[static_cast<std::size_t>(i) * n + j] = acc;
              }
            }
            g_sink = static_cast<int64_t>((*outf)[0]);
          }};
}

Pair make_elementwise(std::string_view op, int count, std::mt19937_64& rng) {
  // GELU inputs span [-4, 4], exp inputs [-10, 0], both with 16-bit codes.
  const double s = (op == "gelu" ? 4.0 : 10.0) / 32767;
  std::uniform_int_distribution<int32_t> u(-32767, op == "gelu" ? 32767 : 0);
  auto q = std::make_shared<std::vector<int32_t>>(static_cast<std::size_t>(count));
  for (auto& v : *q) v = u(rng);
  auto x = std::make_shared<std::vector<float>>(q->size());
  for (std::size_t i = 0; i < q->size(); ++i) (*x)[i] = static_cast<float>((*q)[i] * s);
  auto out = std::make_shared<std::vector<int32_t>>(q->size());
  auto outf = std::make_shared<std::vector<float>>(q->size());
  if (op == "gelu") {
    const auto plan = compile_gelu(s, 32767).plan;
    return {[=] {
              kernels::i_gelu(*q, *out, plan, OverflowPolicy::kSaturate);
              g_sink = (*out)[0];
            },
            [=] {
              for (std::size_t i = 0; i < x->size(); ++i) {
                const float v = (*x)[i];
                (*outf)[i] = 0.5f * v * (1.0f + std::erf(v * 0.70710678f));
              }
              g_sink = static_cast<int64_t>((*outf)[0]);
            }};
  }
  const auto plan = compile_exp(s).plan;
  return {[=] {
            kernels::i_exp(*q, *out, plan, OverflowPolicy::kSaturate);
            g_sink = (*out)[0];
          },
          [=] {
            for (std::size_t i = 0; i < x->size(); ++i) (*outf)[i] = std::exp((*x)[i]);
            g_sink = static_cast<int64_t>((*outf)[0]);
          }};
}

Pair make_rowwise(std::string_view op, int rows, int cols, std::mt19937_64& rng) {
  const double s = 8.0 / 32767;
  std::uniform_int_distribution<int32_t> u(-32767, 32767);
  const auto n = static_cast<std::size_t>(rows) * cols;
  auto q = std::make_shared<std::vector<int32_t>>(n);
  for (auto& v : *q) v = u(rng);
  auto x = std::make_shared<std::vector<float>>(n);
  for (std::size_t i = 0; i < n; ++i) (*x)[i] = static_cast<float>((*q)[i] * s);
  auto out = std::make_shared<std::vector<int32_t>>(n);
  auto outf = std::make_shared<std::vector<float>>(n);
  const auto c = static_cast<std::size_t>(cols);
  if (op == "softmax") {
    const auto plan = compile_softmax(s).plan;
    return {[=] {
              for (int r = 0; r < rows; ++r) {
                kernels::i_softmax(std::span<const int32_t>(q->data() + r * c, c),
                                   std::span<int32_t>(out->data() + r * c, c), plan,
                                   OverflowPolicy::kSaturate);
              }
              g_sink = (*out)[0];
            },
            [=] {
              for (int r = 0; r < rows; ++r) {
                const float* xr = x->data() + r * c;
                float* o = outf->data() + r * c;
                const float mx = *std::max_element(xr, xr + c);
                float sum = 0.0f;
                for (std::size_t j = 0; j < c; ++j) sum += o[j] = std::exp(xr[j] - mx);
                for (std::size_t j = 0; j < c; ++j) o[j] /= sum;
              }
              g_sink = static_cast<int64_t>((*outf)[0]);
            }};
  }
  const kernels::LayerNormPlan plan{};
  return {[=] {
            for (int r = 0; r < rows; ++r) {
              kernels::i_layernorm(std::span<const int32_t>(q->data() + r * c, c),
                                   std::span<int32_t>(out->data() + r * c, c), plan,
                                   OverflowPolicy::kSaturate);
            }
            g_sink = (*out)[0];
          },
          [=] {
            for (int r = 0; r < rows; ++r) {
              const float* xr = x->data() + r * c;
              float* o = outf->data() + r * c;
              float mean = 0.0f, var = 0.0f;
              for (std::size_t j = 0; j < c; ++j) mean += xr[j];
              mean /= static_cast<float>(c);
              for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mean) * (xr[j] - mean);
              const float inv = 1.0f / std::sqrt(var / static_cast<float>(c) + 1e-12f);
              for (std::size_t j = 0; j < c; ++j) o[j] = (xr[j] - mean) * inv;
            }
            g_sink = static_cast<int64_t>((*outf)[0]);
          }};
}

}  // namespace

const std::vector<std::string>& known_ops() {
  static const std::vector<std::string> ops{"gemm", "gelu", "softmax", "layernorm", "exp"};
  return ops;
}

std::vector<std::string> default_sizes(std::string_view op) {
  if (op == "gemm") return {"16x64x64", "128x768x768"};
  if (op == "gelu" || op == "exp") return {"4096", "393216"};
  if (op == "softmax") return {"64x16", "1536x128"};
  if (op == "layernorm") return {"16x64", "128x768"};
  throw InvalidArgument("unknown op '" + std::string(op) + "'");
}

std::vector<BenchRow> microbench(std::string_view op, std::span<const std::string> sizes,
                                 int repetitions, uint64_t seed) {
  if (std::find(known_ops().begin(), known_ops().end(), op) == known_ops().end()) {
    throw InvalidArgument("unknown op '" + std::string(op) + "'");
  }
  if (repetitions < kMinRepetitions) {
    throw InvalidArgument("at least " + std::to_string(kMinRepetitions) +
                          " repetitions are required, got " + std::to_string(repetitions));
  }
  std::mt19937_64 rng(seed);
  std::vector<BenchRow> rows;
  for (const auto& size : sizes) {
    Pair p;
    if (op == "gemm") {
      p = make_gemm(parse_size(size, 3), rng);
    } else if (op == "gelu" || op == "exp") {
      p = make_elementwise(op, parse_size(size, 1)[0], rng);
    } else {
      const auto rc = parse_size(size, 2);
      p = make_rowwise(op, rc[0], rc[1], rng);
    }
    BenchRow r;
    r.op = std::string(op);
    r.size = size;
    r.int_median_ns = median_ns(p.integer, repetitions);
    r.float_median_ns = median_ns(p.floating, repetitions);
    r.speedup = r.int_median_ns > 0 ? r.float_median_ns / r.int_median_ns : 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "op,size,int_median_ns,float_median_ns,speedup\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.0f,%.0f,%.4f", r.int_median_ns, r.float_median_ns, r.speedup);
    os << r.op << ',' << r.size << ',' << buf << '\n';
  }
}

}  // namespace intq::bench

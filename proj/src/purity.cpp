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

#include "intq/purity.hpp"

#include <atomic>
#include <mutex>

namespace intq::purity {
namespace {

constexpr std::size_t kMaxSites = 64;

std::atomic<std::size_t> g_counter{0};
std::atomic<int> g_active{0};
std::mutex g_sites_mutex;
std::vector<std::string> g_sites;

}  // namespace

void record_float_op(const char* site) noexcept {
  g_counter.fetch_add(1, std::memory_order_relaxed);
  if (g_active.load(std::memory_order_relaxed) > 0) {
    try {
      std::lock_guard<std::mutex> lock(g_sites_mutex);
      if (g_sites.size() < kMaxSites) g_sites.emplace_back(site);
    } catch (...) {
    }
  }
}

std::size_t total_float_ops() noexcept { return g_counter.load(); }

bool kernels_built_general_regs_only() noexcept {
#ifdef INTQ_KERNELS_GENERAL_REGS_ONLY
  return true;
#else
  return false;
#endif
}

Probe::Probe() : start_(g_counter.load()) {
  if (g_active.fetch_add(1) == 0) {
    std::lock_guard<std::mutex> lock(g_sites_mutex);
    g_sites.clear();
  }
}

Probe::~Probe() { g_active.fetch_sub(1); }

std::size_t Probe::count() const noexcept { return g_counter.load() - start_; }

std::vector<std::string> Probe::sites() const {
  std::lock_guard<std::mutex> lock(g_sites_mutex);
  return g_sites;
}

}  // namespace intq::purity

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
#include <string>
#include <vector>

// Floating-point instrumentation.
//
// Every library entry point that performs real arithmetic (quantization,
// scale folding, kernel compilation, oracles) reports itself through
// record_float_op(). A Probe counts those reports while it is alive, so a
// test can wrap an integer-only region and assert the count stays at zero.
//
// The runtime integer kernels are additionally compiled with
// -mgeneral-regs-only where the toolchain supports it, which turns any
// floating-point instruction in them into a build error.
namespace intq::purity {

void record_float_op(const char* site) noexcept;

// Total number of float touchpoints since process start.
std::size_t total_float_ops() noexcept;

// True when the integer kernel translation unit was built with the
// general-registers-only guard.
bool kernels_built_general_regs_only() noexcept;

class Probe {
 public:
  Probe();
  ~Probe();
  Probe(const Probe&) = delete;
  Probe& operator=(const Probe&) = delete;

  std::size_t count() const noexcept;
  // First few call sites seen while the probe was active.
  std::vector<std::string> sites() const;

 private:
  std::size_t start_;
};

}  // namespace intq::purity

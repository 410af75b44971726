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

// Integer-only execution of a compiled encoder. Lives in its own translation
// unit built without access to floating-point registers.

#include <cstdint>
#include <span>
#include <vector>

#include "intq/encoder.hpp"

namespace intq::detail {

std::vector<int8_t> run_layers(std::span<const int8_t> x, const std::vector<EncoderWeights>& weights,
                               const std::vector<IntegerEncoder::LayerPlan>& plans,
                               OverflowPolicy policy, int threads, ExecutionTrace* trace);

std::vector<int32_t> run_self_attention(std::span<const int8_t> x, const EncoderWeights& weights,
                                        const IntegerEncoder::LayerPlan& plan,
                                        OverflowPolicy policy, int threads);

}  // namespace intq::detail

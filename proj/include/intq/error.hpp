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

#include <stdexcept>
#include <string>

namespace intq {

// Bad parameters: non-positive scales, unsupported bit widths, shape
// mismatches, violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad data: non-finite values where finite ones are required.
class InvalidData : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A 32-bit accumulator would leave its range under the trap policy.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// What an integer kernel does when an intermediate leaves the 32-bit range.
enum class OverflowPolicy { kTrap, kSaturate };

#ifdef NDEBUG
inline constexpr OverflowPolicy kDefaultOverflowPolicy = OverflowPolicy::kSaturate;
#else
inline constexpr OverflowPolicy kDefaultOverflowPolicy = OverflowPolicy::kTrap;
#endif

}  // namespace intq

// Copyright 2026 The lagsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LAGSIM_TYPES_H_
#define LAGSIM_TYPES_H_

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace lagsim {

// Simulated time and durations, in microseconds.
using Micros = int64_t;

// Monotonically increasing per run; doubles as the deterministic tiebreak.
using EntityId = uint64_t;
// Slot of an entity in the scheduler arena. Slots are recycled, ids are not.
using EntityHandle = uint32_t;
using GroupId = uint32_t;
using CoreId = int32_t;
using FunctionId = uint32_t;

inline constexpr EntityHandle kNoEntity = std::numeric_limits<EntityHandle>::max();
inline constexpr GroupId kRootGroup = 0;
inline constexpr GroupId kNoGroup = std::numeric_limits<GroupId>::max();
inline constexpr CoreId kNoCore = -1;

inline constexpr double kDefaultWeight = 1024.0;
inline constexpr double kInfiniteCredit = std::numeric_limits<double>::infinity();

inline constexpr Micros kMicrosPerSecond = 1'000'000;

// Invalid user input: configuration, files, arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Engine bookkeeping violated an internal invariant.
class SimError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lagsim

#endif  // LAGSIM_TYPES_H_

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

// JSON experiment configuration.
//
// A config file holds `schema_version` plus optional `run`, `workload`,
// `sweep` and `consolidate` sections. Missing fields take the documented
// defaults; unknown keys and wrong types are errors that name the field path
// (e.g. "run.policy_params.rr_bandwidth_cap: must be in (0, 1]").

#ifndef LAGSIM_CONFIG_H_
#define LAGSIM_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lagsim/experiment.h"

namespace lagsim {

inline constexpr int kSchemaVersion = 1;

struct SweepConfig {
  std::vector<double> densities{1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
  std::vector<std::string> policies{"CFS", "LAGS", "LAGS-static"};
  // Non-empty: a window sweep at the base density instead.
  std::vector<uint32_t> window_ticks;
  int parallel = 1;
};

struct ExperimentConfig {
  Scenario scenario;
  SweepConfig sweep;
  ConsolidationParams consolidate{216, 1, 4, {"CFS", "LAGS"}};

  void Validate() const;
};

// Throws ConfigError. A document with a top-level "config" key (a manifest)
// is read through that key.
ExperimentConfig ParseConfig(const nlohmann::json& doc);
ExperimentConfig ParseConfigText(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);

// Fully resolved config (service included); parsing it back gives a config
// that runs identically.
nlohmann::json ToJson(const ExperimentConfig& config);

// Parses "a,b,c" lists for command-line overrides.
std::vector<double> ParseDoubleList(const std::string& text, const std::string& field);
std::vector<uint32_t> ParseUintList(const std::string& text, const std::string& field);
std::vector<std::string> ParseNameList(const std::string& text, const std::string& field);

}  // namespace lagsim

#endif  // LAGSIM_CONFIG_H_

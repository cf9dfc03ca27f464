// Copyright 2026 The DONUT Authors.
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

#include <cstdint>

#include "json.hpp"

#include "donut/neural.hpp"

namespace donut::nn {

inline constexpr int kCheckpointSchema = 1;

/// [{name, shape: [rows, cols], values: row-major}] for each parameter.
nlohmann::json params_to_json(const ParamList& params);
/// Loads values by position; names and shapes must match.
void params_from_json(const nlohmann::json& layers, const ParamList& params);

nlohmann::json optimizer_to_json(const AdamW& opt);
void optimizer_from_json(const nlohmann::json& j, AdamW& opt);

/// The full checkpoint object; callers add model-specific config under "config".
nlohmann::json make_checkpoint(const ParamList& params, const AdamW& opt, std::uint64_t seed, int epoch);

}  // namespace donut::nn

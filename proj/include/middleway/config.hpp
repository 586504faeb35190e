// Copyright 2026 The Middleway Authors
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

#ifndef MIDDLEWAY_CONFIG_HPP
#define MIDDLEWAY_CONFIG_HPP

#include <span>
#include <string>
#include <string_view>

#include "middleway/simulation.hpp"

namespace middleway {

/// JSON text for `cfg`. Every field is written, so the output is also a
/// complete template.
std::string scenario_to_json(const ScenarioConfig& cfg);

/// Applies a JSON document and then `key=value` overrides onto the canonical
/// scenario. Keys are dotted paths ("controller.v_offset", "vehicles.0.lane");
/// values are JSON, or a bare string when they do not parse. Arrays in the
/// document replace the defaults wholesale. Throws ConfigError naming the
/// field on unknown keys, wrong types or invalid values.
ScenarioConfig parse_scenario(std::string_view json_text,
                              std::span<const std::string> overrides = {});

/// As parse_scenario, reading the document from `path`. An empty path means
/// the canonical scenario. Throws InputError when the file cannot be read.
ScenarioConfig load_scenario(const std::string& path, std::span<const std::string> overrides = {});

/// Run summary as JSON, with the configuration echoed under "config".
std::string report_to_json(const RunReport& report, const ScenarioConfig& cfg);

}  // namespace middleway

#endif  // MIDDLEWAY_CONFIG_HPP

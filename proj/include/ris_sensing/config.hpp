#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ris_sensing/signal_model.hpp"

namespace ris {

/// Sets one ScenarioConfig field by name. Setting delta_f also resets T_s to
/// 1/delta_f; an explicit T_s afterwards overrides that. Unknown keys and
/// unparsable values throw UsageError.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Splits "key=value" (whitespace around either side is ignored).
std::pair<std::string, std::string> parse_assignment(const std::string& text);

/// Reads a flat key-value file ("key = value" per line, '#' starts a comment)
/// on top of `cfg`.
void load_config_file(ScenarioConfig& cfg, const std::string& path);

/// Every field as (key, value) text, in a fixed order; feeding the pairs back
/// through apply_setting reproduces the config.
std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg);

/// All accepted keys, in config_entries() order.
const std::vector<std::string>& config_keys();

} // namespace ris

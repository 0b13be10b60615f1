#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "seqrep/harness/config.hpp"

namespace seqrep::harness {

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> list_presets();
bool is_preset(std::string_view name);

/// Throws UsageError for unknown names.
ExperimentConfig preset_config(std::string_view name);

}  // namespace seqrep::harness

#pragma once

#include "msfa/pipeline.hpp"
#include "msfa/simulator.hpp"

#include <string>

namespace msfa {

/// Settings read from a JSON config document with optional sections
/// "train", "simulate" and "dpca". Unknown keys are rejected.
struct ConfigFile {
  TrainConfig train;
  SimConfig simulate;
  bool has_simulate = false;
  DpcaConfig dpca;
};

/// `base` supplies defaults for every key the document omits.
ConfigFile parse_config(const std::string& text, const ConfigFile& base = {});
ConfigFile load_config(const std::string& path, const ConfigFile& base = {});

/// Canonical config document {"simulate": {...}} for a simulator config.
std::string sim_config_json(const SimConfig& config);

}  // namespace msfa

#pragma once

#include "msfa/fusion.hpp"

#include <string>

namespace msfa {

inline constexpr int kModelSchemaVersion = 1;

/// Self-describing JSON document: every float is a binary64 hex literal, so
/// save -> load -> save is byte-identical. Throws ModelFileError subclasses.
std::string serialize_model(const MsfaModel& model);
MsfaModel deserialize_model(const std::string& text);

void save_model(const MsfaModel& model, const std::string& path);
MsfaModel load_model(const std::string& path);

/// Structural equality including every float bit.
bool models_equal(const MsfaModel& a, const MsfaModel& b);

}  // namespace msfa

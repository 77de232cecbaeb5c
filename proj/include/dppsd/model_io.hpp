#pragma once

#include <filesystem>
#include <string>

#include "dppsd/predictor.hpp"

namespace dppsd {

/// Versioned JSON document with architecture, normalization and all four
/// parameter arrays. Doubles are written in shortest round-trip form, so
/// load(save(m)) == m bit for bit.
std::string model_to_json(const RbfnModel& model);
/// Throws FormatError naming the offending field; never returns a partial model.
RbfnModel model_from_json(const std::string& text);

/// Writes via a temporary file and rename. Throws IoError.
void save_model(const RbfnModel& model, const std::filesystem::path& path);
RbfnModel load_model(const std::filesystem::path& path);

}  // namespace dppsd

#pragma once

#include <filesystem>
#include <string>

#include "dtsurv/hazard.hpp"

namespace dtsurv {

inline constexpr int kModelFormatVersion = 1;

// Self-describing JSON document: format tag and version, feature columns,
// standardization statistics, category levels, coefficients by name,
// calibration and solver diagnostics. Doubles are written with round-trip
// precision, so a reloaded model scores bit-identically.
std::string serialize_model(const HazardModel& model, const std::string& kind);
HazardModel deserialize_model(const std::string& text, const std::string& expected_kind);

void save_model(const std::filesystem::path& path, const HazardModel& model,
                const std::string& kind);
HazardModel load_model(const std::filesystem::path& path,
                       const std::string& expected_kind);

}  // namespace dtsurv

#pragma once

#include "stackreg/error.hpp"
#include "stackreg/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace stackreg {

inline constexpr int kConfigVersion = 1;
inline constexpr int kReportVersion = 1;

/// Every registration setting, defaults included, in the config file layout.
nlohmann::json config_to_json(const RegistrationConfig& config);

/// Strict parse of the registration settings. Keys absent from `j` keep the
/// values of `base`; unknown keys or bad values throw invalid_params naming
/// the fields. CLI-level keys (input, output, custom weights file) are not
/// handled here.
RegistrationConfig parse_config(const nlohmann::json& j, const RegistrationConfig& base = {});

/// Registration report. Everything except the "timing" subtree is a pure
/// function of the input stack and the settings.
nlohmann::json make_report(const RegistrationConfig& config, const RegistrationResult& result,
                           const StackMetadata& metadata, const std::string& input);

/// {"status": "error", "error": {"code": ..., "message": ...}}
nlohmann::json error_record(ErrorCode code, const std::string& message);

}  // namespace stackreg

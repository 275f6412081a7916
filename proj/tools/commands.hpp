#pragma once

#include "stackreg/report.hpp"
#include "stackreg/synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace stackreg::cli {

/// Command-line values that override the config file.
struct RegisterOverrides {
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<int> threads;
  std::optional<std::string> window;
  std::optional<std::string> method;
  std::optional<std::string> peak_mode;
  std::optional<int> candidates;
  std::optional<std::string> mask;
  std::optional<double> k_max;
  std::optional<double> k_min;
  std::optional<double> axis_scale;
  std::optional<std::string> weights_file;
  std::optional<std::string> outlier_method;
  std::optional<double> threshold;
  std::optional<int> max_paths;
  std::optional<int> polynomial_order;
  std::optional<double> row_fraction;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnrepaired = 3;

/// Runs the full pipeline and writes the artifacts. Throws stackreg::Error on
/// fatal problems; returns kExitUnrepaired when outliers remain unrepaired.
int run_register(const std::optional<std::filesystem::path>& config_path, const RegisterOverrides& overrides);

struct SynthOptions {
  std::optional<std::string> preset;
  std::optional<std::filesystem::path> params_file;
  std::filesystem::path output;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void run_synth(const SynthOptions& options);

/// Metrics between two position sources (report or truth files, either order).
nlohmann::json run_compare(const std::filesystem::path& a, const std::filesystem::path& b,
                           std::optional<double> jump_threshold);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace stackreg::cli

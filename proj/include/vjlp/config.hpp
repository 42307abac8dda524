#ifndef VJLP_CONFIG_HPP
#define VJLP_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vjlp/model.hpp"
#include "vjlp/presets.hpp"

namespace vjlp {

/// Flat experiment configuration. Text form is one `key = value` per line;
/// `#` starts a comment; lists are comma separated.
///
/// Times (`burn_in`, `time`, `horizon`) are in simulated time units.
struct ExperimentConfig {
  std::string preset = "gaussian2d";
  PresetParams params;
  double gamma = 1.0;
  double rho = 0.0;
  double delta = 0.01;
  std::uint64_t steps = 10000;
  std::uint64_t seed = 1;
  std::string activation = "softplus:1";
  std::vector<std::string> observables{"v1^2"};
  std::string out = "out";
  int workers = 1;
  std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
  int replicas = 4;
  double burn_in = 10.0;
  std::uint64_t stride = 1;
  double time = 2e5;     // per-replica simulated time of sweeps
  double horizon = 20.0; // ergodicity diagnostic window
  std::string init = "gibbs"; // gibbs | zero
  std::string scheme = "bjaoajb"; // bjaoajb | baoab

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses text; unknown keys, malformed values and broken invariants throw
/// ContractViolation.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Applies one `key=value` override.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Checks names resolve, the delta grid is strictly decreasing and the
/// scheme parameters are valid.
void validate_config(const ExperimentConfig& cfg);

/// "softplus:a" or "relu".
ActivationD parse_activation(std::string_view text);
std::string format_activation(const ActivationD& act);

SchemeConfigD scheme_config(const ExperimentConfig& cfg);
Preset preset_from(const ExperimentConfig& cfg);

} // namespace vjlp

#endif // VJLP_CONFIG_HPP

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "abdsde/abdsde.hpp"

namespace abdsde::cli {

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> h;
};

struct DualitySettings {
  LinearDualityCoeffs coeffs;
  std::size_t outer_paths = 64;
  std::size_t inner_paths = 2048;
  int levels = 3;
};

struct ScenarioFile {
  /// Compact JSON of the file after defaults and overrides are applied.
  std::string resolved;
  std::uint64_t hash = 0;
  Scenario scenario;
  CondExpBackend backend;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  std::optional<Scenario> compare;
  std::optional<double> compare_epsilon;
  std::optional<DualitySettings> duality;
  LipschitzAudit audit;

  /// The tree ensemble for the exact backend, sampled paths otherwise.
  PathEnsemble make_paths() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

/// Throws ParseError (with line and column, or the offending field) and
/// ValidationError whose cause() names the failed check.
ScenarioFile parse_scenario(const std::string& text, const Overrides& overrides = {});
ScenarioFile load_scenario(const std::string& path, const Overrides& overrides = {});

}  // namespace abdsde::cli

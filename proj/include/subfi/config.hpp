#pragma once

// Experiment configuration: a single versioned JSON document.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include "subfi/io.hpp"
#include "subfi/kernel.hpp"
#include "subfi/presets.hpp"
#include "subfi/system.hpp"

namespace subfi {

struct NoiseOff {};
/// Σ_e scaled so the output signal-to-noise ratio equals db.
struct NoiseSnr {
  double db = 25.0;
};
/// Σ_e replaced by an explicit matrix.
struct NoiseCovariance {
  Matrix sigma;
};
/// Σ_e of the model used verbatim.
struct NoiseModel {};
using NoiseSpec = std::variant<NoiseOff, NoiseSnr, NoiseCovariance, NoiseModel>;

enum class DictionarySource { Data, Nominal };

struct RunSegment {
  Index samples = 0;
  InputKind input = ZeroInput{};
  Vector x0;  // empty = zero state
  /// PRBS seeds come from the trial's seed stream unless the config fixes one.
  bool seed_from_trial = true;
};

struct Thresholds {
  std::optional<double> residual;  // nullopt = derived from healthy validation data
  double auto_factor = 5.0;
  double auto_percentile = 99.0;
  double tie = 1e-6;
  double angle = 1e-6;
};

struct DiscernSettings {
  bool enabled = true;
  bool strict = true;
  double rel_tol = kDefaultRelTol;
};

struct MonteCarloSettings {
  std::size_t trials = 1;
  std::uint64_t master_seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string model_name;  // preset name, or "inline"
  StateSpaceModel model = example_model();
  Index horizon = 2;
  RankPolicy rank_policy = GapHeuristic{};
  double pe_rel_tol = kDefaultRelTol;
  RunSegment healthy;
  RunSegment faulty;
  FaultScenario scenario;
  NoiseSpec noise = NoiseOff{};
  DictionarySource dictionaries = DictionarySource::Data;
  Thresholds thresholds;
  DiscernSettings discern;
  MonteCarloSettings monte_carlo;
  std::filesystem::path output_dir = "out";
};

/// Parses and validates; InvalidConfig messages name the offending field.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Complete document with every default spelled out.
Json config_to_json(const ExperimentConfig& config);

}  // namespace subfi

#pragma once

// Config-driven pipelines: healthy data → kernel → dictionaries → faulty run
// → residuals → angles → decisions → accuracy, plus the Monte Carlo harness.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subfi/classifier.hpp"
#include "subfi/config.hpp"
#include "subfi/dictionary.hpp"
#include "subfi/discern.hpp"
#include "subfi/kernel.hpp"

namespace subfi {

/// Scale α for Σ_e such that 10·log10(P_y / (α·P_n)) = target_snr_db, where
/// P_y is the mean squared noise-free output under `input` and P_n the mean
/// stationary output-noise power per channel, trace(C P Cᵀ + Σ_e)/n_y with
/// P = A P Aᵀ + K Σ_e Kᵀ. +∞ gives α = 0.
/// Errors: ZeroSignalPower, InvalidModel (unstable A or Σ_e = 0).
double snr_to_noise_scale(const StateSpaceModel& model, const Matrix& input, double target_snr_db);

/// Mean stationary output-noise power per channel at α = 1.
double output_noise_power(const StateSpaceModel& model);

/// Ground truth of the window starting at k (samples k..k+L−1).
struct WindowTruth {
  bool any_fault = false;
  bool pure = true;                    // every sample in one mode
  std::vector<FaultChannel> channels;  // active somewhere in the window
  std::string label() const;           // "healthy", "a1", or "transient"
};

std::vector<WindowTruth> window_truth(const FaultScenario& scenario, Index samples, Index L);

struct Accuracy {
  /// Fault-active windows with ‖r‖ above threshold, transients included.
  double fault_active = 0.0;
  /// Same, restricted to windows lying inside a single fault segment.
  double excluding_transients = 0.0;
  /// Every window; healthy ones must be declared healthy.
  double all_instants = 0.0;
  std::size_t fault_active_count = 0;
  std::size_t pure_fault_count = 0;
  std::size_t window_count = 0;
  std::size_t detected_fault_windows = 0;
  std::size_t fault_windows = 0;
};

/// truth label → decision label → count.
using Confusion = std::map<std::string, std::map<std::string, std::size_t>>;

Accuracy score(const std::vector<Decision>& decisions, const std::vector<WindowTruth>& truth);
Confusion confusion(const std::vector<Decision>& decisions, const std::vector<WindowTruth>& truth);

struct TrialSeeds {
  std::uint64_t healthy_input, healthy_noise;
  std::uint64_t validation_input, validation_noise;
  std::uint64_t faulty_input, faulty_noise;
};
TrialSeeds derive_seeds(std::uint64_t trial_seed);

struct RunResult {
  std::uint64_t seed = 0;
  double noise_scale = 0.0;
  std::optional<double> measured_snr_db;
  TrajectoryData healthy;
  TrajectoryData faulty;
  KernelFilter filter;
  FaultDictionarySet dictionaries;
  double residual_threshold = 0.0;
  ResidualTrace residual;
  AngleTrace angles;
  std::vector<Decision> decisions;
  std::vector<WindowTruth> truth;
  std::optional<DiscernibilityReport> report;
  Accuracy accuracy;
  Confusion confusion;
};

/// Full pipeline for one trial seed. Errors carry the failing stage name.
RunResult run_scenario(const ExperimentConfig& config, std::uint64_t trial_seed,
                       bool with_report = true);

/// filter.json, dictionaries.json, residuals.csv, angles.csv, decisions.csv,
/// discernibility.json, summary.json, healthy.csv, faulty.csv.
void write_run(const RunResult& result, const ExperimentConfig& config,
               const std::filesystem::path& dir);

Json run_summary(const RunResult& result, const ExperimentConfig& config);

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

struct MonteCarloSummary {
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<Accuracy>> trials;  // nullopt = failed trial
  std::vector<std::string> failures;
  Stats fault_active, excluding_transients, all_instants;
  Confusion confusion;
  std::size_t succeeded = 0;
};

/// Trials run in parallel with seeds master_seed + index and are merged by index.
MonteCarloSummary monte_carlo(const ExperimentConfig& config);

Json monte_carlo_to_json(const MonteCarloSummary& summary, const ExperimentConfig& config);

/// Text describing the accuracy denominators and the SNR convention.
Json metric_definitions();

}  // namespace subfi

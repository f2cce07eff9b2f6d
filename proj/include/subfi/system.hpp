#pragma once

// Ground-truth LTI machinery: innovation-form models, fault channels,
// simulation with fault injection, and model-based Markov/Toeplitz builders.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "subfi/numlin.hpp"

namespace subfi {

/// Plain (A, B, C, D) quadruple. Used for fault subsystems and random test
/// systems where no noise model is attached.
struct LtiSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }

  /// Throws DimensionMismatch / InvalidMatrix on inconsistent or non-finite matrices.
  void validate() const;
};

/// 1-based output indices selecting rows of C (and D).
using OutputSubset = std::optional<std::vector<int>>;

enum class ChannelKind { Actuator, Sensor };

struct FaultChannel {
  ChannelKind kind = ChannelKind::Actuator;
  int index = 1;  // 1-based

  /// "a1", "s2", ...
  std::string label() const;
  static FaultChannel parse(std::string_view label);

  static FaultChannel actuator(int i) { return {ChannelKind::Actuator, i}; }
  static FaultChannel sensor(int i) { return {ChannelKind::Sensor, i}; }

  // Actuators order before sensors, then by index.
  auto operator<=>(const FaultChannel&) const = default;
};

/// Innovation-form model
///   x_{k+1} = A x_k + B_u u_k + B_f f_k + K e_k
///   y_k     = C x_k + D_u u_k + D_f f_k + e_k
class StateSpaceModel {
 public:
  /// Validates dimensions, observability of (A, C) and Sigma_e symmetric PSD.
  /// K and Sigma_e may be empty, meaning zero.
  StateSpaceModel(Matrix A, Matrix B_u, Matrix C, Matrix D_u, Matrix K = {}, Matrix Sigma_e = {});

  const Matrix& A() const { return A_; }
  const Matrix& B_u() const { return B_u_; }
  const Matrix& C() const { return C_; }
  const Matrix& D_u() const { return D_u_; }
  const Matrix& K() const { return K_; }
  const Matrix& Sigma_e() const { return Sigma_e_; }

  Index n() const { return A_.rows(); }
  Index n_u() const { return B_u_.cols(); }
  Index n_y() const { return C_.rows(); }

  std::vector<FaultChannel> channels() const;
  void check_channel(const FaultChannel& c) const;

  /// Copy with Sigma_e replaced by scale·Sigma_e.
  StateSpaceModel with_noise_scale(double scale) const;

  /// (A, B_u, C, D_u).
  LtiSystem input_system() const;

  /// (B_f, D_f) for the listed channels, one column each.
  std::pair<Matrix, Matrix> fault_matrices(const std::vector<FaultChannel>& channels) const;

  /// (A, B_f, C_I, D_f,I) with optional output restriction.
  LtiSystem fault_subsystem(const std::vector<FaultChannel>& channels,
                            const OutputSubset& outputs = std::nullopt) const;

 private:
  Matrix A_, B_u_, C_, D_u_, K_, Sigma_e_;
};

// --- fault scenarios ---------------------------------------------------------

struct ZeroSignal {};
struct ConstantSignal {
  double value = 0.0;
};
/// amplitude·sin(2π·frequency·k + phase), k = absolute sample index.
struct SinusoidSignal {
  double amplitude = 1.0;
  double frequency = 0.0;  // cycles per sample
  double phase = 0.0;
};
/// base^(k − offset).
struct GeometricDecaySignal {
  double base = 1.0;
  long offset = 0;
};
struct StepSignal {
  double level = 0.0;
};
/// Explicit samples, index 0 aligned with the segment start.
struct SeriesSignal {
  std::vector<double> values;
};

using FaultSignal = std::variant<ZeroSignal, ConstantSignal, SinusoidSignal, GeometricDecaySignal,
                                 StepSignal, SeriesSignal>;

double evaluate(const FaultSignal& signal, long k, long segment_start);

/// Active on the half-open interval [start, end).
struct FaultSegment {
  long start = 0;
  long end = 0;
  FaultChannel channel;
  FaultSignal signal;
};

struct FaultScenario {
  std::vector<FaultSegment> segments;

  /// Throws InvalidScenario on overlapping segments or times outside [0, T).
  void validate(long samples) const;

  /// Index of the segment active at k, if any.
  std::optional<std::size_t> active_segment(long k) const;
};

// --- trajectories ------------------------------------------------------------

/// Time runs down the rows: u is T×n_u, y is T×n_y.
struct TrajectoryData {
  Matrix u;
  Matrix y;
  std::vector<std::optional<FaultChannel>> f_channel;  // length T when present
  Vector f_value;                                      // length T when present
  std::optional<Matrix> e;                             // T×n_y innovations
  std::optional<Matrix> x;                             // T×n states x_0..x_{T−1}
  Vector x0;

  Index samples() const { return u.rows(); }
  /// Throws DimensionMismatch / InvalidMatrix.
  void validate() const;
};

struct Noise {
  bool enabled = false;
  std::uint64_t seed = 0;

  static Noise off() { return {}; }
  static Noise on(std::uint64_t seed) { return {true, seed}; }
};

/// Runs the innovation-form recursion with the scenario's single active fault.
/// An empty x0 means the zero state.
TrajectoryData simulate(const StateSpaceModel& model, const Matrix& input,
                        const FaultScenario& scenario, Noise noise, const Vector& x0 = {});

/// Same recursion with explicit fault matrices and a T×n_f fault signal, so
/// several faults may be active at once.
TrajectoryData simulate_with_faults(const StateSpaceModel& model, const Matrix& input,
                                    const Matrix& B_f, const Matrix& D_f, const Matrix& faults,
                                    Noise noise, const Vector& x0 = {});

/// Noise-free response of a bare (A, B, C, D) system; returns T×p outputs.
Matrix simulate_lti(const LtiSystem& sys, const Matrix& input, const Vector& x0 = {});

/// Draws T i.i.d. N(0, sigma) vectors (rows) from a deterministic stream.
/// sigma is validated symmetric PSD first.
Matrix gaussian_noise(const Matrix& sigma, Index samples, std::uint64_t seed);

// --- model-based matrices ----------------------------------------------------

struct InputAll {};
struct FaultSet {
  std::vector<FaultChannel> channels;
};
struct Innovation {};
using ChannelSet = std::variant<InputAll, FaultSet, Innovation>;

/// M_0..M_{L−1} of (A, B, C, D): M_0 = D, M_i = C A^{i−1} B.
std::vector<Matrix> markov_parameters(const LtiSystem& sys, Index L);
std::vector<Matrix> markov_parameters(const StateSpaceModel& model, const ChannelSet& set, Index L);

/// [C; CA; …; CA^{L−1}].
Matrix observability(const Matrix& A, const Matrix& C, Index L);
Matrix extended_observability(const StateSpaceModel& model, Index L,
                              const OutputSubset& outputs = std::nullopt);

/// Lower block-triangular Toeplitz matrix of Markov parameters.
Matrix block_toeplitz(const LtiSystem& sys, Index L);
Matrix toeplitz(const StateSpaceModel& model, const ChannelSet& set, Index L,
                const OutputSubset& outputs = std::nullopt);

/// Rows of m belonging to the selected outputs (1-based), block by block.
Matrix select_output_rows(const Matrix& m, Index n_y, const std::vector<int>& outputs);

// --- input generators --------------------------------------------------------

/// ±level driven by a maximal-length Fibonacci LFSR; each bit is held for
/// `hold` samples. Channel c uses an independent register state.
struct PrbsInput {
  double level = 1.0;
  std::uint64_t seed = 1;
  int register_bits = 10;
  int hold = 1;
};
/// Cycles through values, holding each for dwell samples.
struct MultiStepInput {
  std::vector<double> values;
  int dwell = 1;
};
/// 1 at k = 0 on every channel.
struct ImpulseInput {};
struct ZeroInput {};

using InputKind = std::variant<PrbsInput, MultiStepInput, ImpulseInput, ZeroInput>;

Matrix generate_input(const InputKind& kind, Index samples, Index n_u);

/// Raw LFSR bit stream (for period checks).
std::vector<int> lfsr_bits(int register_bits, std::uint64_t seed, std::size_t count);

}  // namespace subfi

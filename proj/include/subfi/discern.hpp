#pragma once

// Discernibility analysis: transmission-zero counting through nullities of
// [O_L T_L], zero-dynamic inputs, augmented fault pairs, and the pairwise
// dictionary intersection table with its closed-form predictions.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subfi/dictionary.hpp"
#include "subfi/numlin.hpp"
#include "subfi/system.hpp"

namespace subfi {

struct ZeroCount {
  std::size_t finite = 0;
  std::size_t infinite = 0;
  std::size_t total = 0;
  Index horizon = 0;
  std::size_t tau = 0;
};

inline constexpr std::uint64_t kProbeSeed = 0x5EEDF00DULL;

/// Rosenbrock rank test rank [A − zI B; C D] = n + m at random probes z drawn
/// on the annulus 0.5 ≤ |z| ≤ 2 (one draw plus two retries).
bool is_left_invertible(const LtiSystem& sys, std::uint64_t seed = kProbeSeed);

/// Smallest τ ≤ L_max with rank T_{τ+1} − rank T_τ = m; nullopt if the system
/// is not left invertible or τ exceeds L_max.
std::optional<std::size_t> minimal_delay(const LtiSystem& sys, Index L_max,
                                         std::uint64_t seed = kProbeSeed);

/// total = dim N([O_L T_L]), infinite = dim N(T_L), finite = total − infinite.
/// Requires L ≥ max(τ, n): HorizonTooShort otherwise. RankToleranceAmbiguous
/// if a singular value sits within two decades of the rank threshold.
ZeroCount count_zeros_nullity(const LtiSystem& sys, Index L, double rel_tol = kDefaultRelTol);

ZeroCount count_zeros_nullity(const StateSpaceModel& model, const std::vector<FaultChannel>& channels,
                              Index L, const OutputSubset& outputs = std::nullopt,
                              double rel_tol = kDefaultRelTol);

/// dim N([O_L P]) from data alone: cols(P) − rank(K_y·P).
std::size_t data_nullity(const KernelFilter& filter, const Matrix& signature,
                         double rel_tol = kDefaultRelTol);

struct ZeroDynamics {
  Matrix basis;  // (n + L·m) × d, orthonormal columns of N([O_L T_L])
  Matrix x0;     // n × d
  Matrix f0;     // L·m × d
};

/// Basis of N([O_L T_L]) split into (x0, f0); each f0 is checked to satisfy
/// K_y·T_L·f0 ≈ 0 for the parity space of O_L.
ZeroDynamics zero_dynamic_inputs(const LtiSystem& sys, Index L, double rel_tol = kDefaultRelTol);

/// Two-input fault subsystem (A, [B_f¹ B_f²], C, [D_f¹ D_f²]).
LtiSystem augment_pair(const StateSpaceModel& model, const FaultChannel& c1, const FaultChannel& c2);

struct ZeroCluster {
  std::complex<double> value;
  std::size_t multiplicity = 0;
};

struct PencilZeros {
  std::vector<std::complex<double>> finite_zeros;
  std::vector<ZeroCluster> clusters;  // absolute clustering gap 1e-6
  ZeroCount count;
};

/// Independent zero oracle: the Rosenbrock pencil is deflated by orthogonal
/// transformations until the feedthrough is square and invertible; the finite
/// zeros are then eigenvalues of A − B D⁻¹ C. Infinite zeros come from the
/// Toeplitz nullity at L = max(τ, 1). Throws NumericallyIllConditioned when a
/// rank decision is not clear-cut, InvalidModel when not left invertible.
PencilZeros pencil_zero_oracle(const LtiSystem& sys);

enum class TheoremCase { ActAct, ActSen, SenSenMany, SenSenTwo };
std::string to_string(TheoremCase c);

struct IntersectionRecord {
  FaultChannel first;
  FaultChannel second;
  TheoremCase theorem_case = TheoremCase::ActAct;
  std::size_t d_cap = 0;                 // from the dictionaries (rank form)
  std::optional<std::size_t> nullity_form;  // oracle nullity formula
  std::optional<std::size_t> predicted;     // closed-form case prediction
  SubspaceBasis basis;                   // intersection in residual space
  std::optional<Matrix> fault_directions;   // f-parts of N([O T^c T^c'])
};

struct ChannelZeros {
  FaultChannel channel;
  std::size_t data_nullity = 0;            // L − rank D^c
  std::optional<ZeroCount> oracle;
};

struct DiscernibilityReport {
  Index L = 0;
  std::vector<IntersectionRecord> pairs;
  std::vector<ChannelZeros> zeros;
  std::optional<bool> outputs_observable;  // every single output observable
  std::vector<std::string> notes;

  std::vector<const IntersectionRecord*> indiscernible() const;
  const IntersectionRecord& pair(const FaultChannel& a, const FaultChannel& b) const;
};

struct ReportOptions {
  double rel_tol = kDefaultRelTol;
  /// Throw TheoremMismatch when the dictionary side and the nullity formula disagree.
  bool strict = true;
};

DiscernibilityReport intersection_report(const FaultDictionarySet& dicts,
                                         const StateSpaceModel* oracle,
                                         const ReportOptions& options = {});

}  // namespace subfi

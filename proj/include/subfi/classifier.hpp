#pragma once

// Geometric fault classifier: the angle between each residual and its
// projection onto every dictionary subspace, and the argmax decision on cos θ.

#include <optional>
#include <string>
#include <vector>

#include "subfi/dictionary.hpp"
#include "subfi/kernel.hpp"

namespace subfi {

struct AngleTrace {
  std::vector<long> k;
  std::vector<FaultChannel> channels;
  Matrix cos;    // time × channel, in [0, 1]
  Matrix theta;  // time × channel, in [0, π/2]
  Vector residual_norm;

  Index size() const { return cos.rows(); }
};

/// cos θ = ‖P r‖ / ‖r‖ with P the orthogonal projector onto the dictionary
/// range; 0 when r or P r vanishes.
double cos_angle(const Vector& r, const SubspaceBasis& basis);

AngleTrace angles(const ResidualTrace& residual, const FaultDictionarySet& dicts);

enum class DecisionStatus { Healthy, Fault, Ambiguous };

struct Decision {
  long k = 0;
  DecisionStatus status = DecisionStatus::Healthy;
  std::vector<FaultChannel> channels;  // winner, or every tied channel
  double cos = 0.0;                    // winning cos θ
  double margin = 0.0;                 // winning cos minus best non-tied cos

  /// "healthy", "a1", or "a1|s2".
  std::string label() const;
};

/// ‖r_k‖ ≤ residual_threshold → Healthy; otherwise argmax over cos θ, with all
/// channels within tie_tol of the max reported as Ambiguous.
std::vector<Decision> decide(const AngleTrace& angles, double residual_threshold, double tie_tol);

/// Smallest channel subset (by size, then lexicographic) whose direct-sum
/// subspace contains r up to cos θ ≥ 1 − angle_tol.
std::optional<std::vector<FaultChannel>> try_combination_search(const Vector& r,
                                                                const FaultDictionarySet& dicts,
                                                                std::size_t max_faults,
                                                                double angle_tol);

/// As above; throws NotFound when no subset qualifies.
std::vector<FaultChannel> combination_search(const Vector& r, const FaultDictionarySet& dicts,
                                             std::size_t max_faults, double angle_tol);

/// Per-time combination search over a residual trace.
std::vector<std::optional<std::vector<FaultChannel>>> combination_search(
    const ResidualTrace& residual, const FaultDictionarySet& dicts, std::size_t max_faults,
    double angle_tol);

}  // namespace subfi

#pragma once

// Fault signatures (column selections of the input Toeplitz range or of the
// identity pattern) and the dictionaries K_y·signature they induce.

#include <cstddef>
#include <vector>

#include "subfi/kernel.hpp"
#include "subfi/numlin.hpp"
#include "subfi/system.hpp"

namespace subfi {

/// 0-based column indices {(i−1) + t·width : t = 0..L−1}, width = n_u for
/// actuators and n_y for sensors. Throws InvalidChannel.
std::vector<Index> column_selection(ChannelKind kind, int i, Index L, Index n_u, Index n_y);

struct FaultSignature {
  FaultChannel channel;
  Matrix matrix;  // L·n_y × L
};

/// Actuator signatures from the learned input Toeplitz range (L21 itself when
/// n_u = 1, L21·L11⁻¹ otherwise); sensor signatures from I_L ⊗ I_{n_y}.
std::vector<FaultSignature> build_signatures(const KernelFilter& filter);

/// Same, with actuator columns taken from the model's T^u_L.
std::vector<FaultSignature> build_oracle_signatures(const KernelFilter& filter,
                                                    const StateSpaceModel& model);

struct FaultDictionary {
  FaultChannel channel;
  Matrix matrix;  // r × L
  SubspaceBasis basis;
  std::size_t rank = 0;
};

struct FaultDictionarySet {
  Index L = 0;
  Index residual_dim = 0;
  std::vector<FaultDictionary> entries;

  std::vector<FaultChannel> channels() const;
  /// Throws InvalidChannel if absent.
  const FaultDictionary& at(const FaultChannel& c) const;
};

FaultDictionarySet build_dictionaries(const KernelFilter& filter,
                                      const std::vector<FaultSignature>& signatures,
                                      double rel_tol = kDefaultRelTol);

}  // namespace subfi

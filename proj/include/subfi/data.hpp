#pragma once

// Hankel matrices and windowed data vectors built from time-major signals.

#include <cstddef>

#include "subfi/numlin.hpp"

namespace subfi {

/// Block-Hankel matrix of a T×d signal: column j stacks samples j..j+L−1.
struct HankelStack {
  Index signal_dim = 0;
  Index window = 0;
  Index depth = 0;  // T − L + 1
  Matrix matrix;    // (L·d) × depth
};

/// Throws WindowTooLong if L > T, OutOfRange if L < 1.
HankelStack hankel(const Matrix& signal, Index L);

/// Stacked samples k..k+L−1 (length L·d). Throws OutOfRange if k+L > T.
Vector window(const Matrix& signal, Index k, Index L);

struct RankCondition {
  bool satisfied = false;
  std::size_t rank = 0;
  std::size_t required = 0;
};

/// rank [X; U] against n + L·n_u, where states is n × depth. Only meaningful in
/// simulation, where the states are known.
RankCondition check_rank_condition(const Matrix& states, const HankelStack& u_hankel,
                                   double rel_tol = kDefaultRelTol);

/// n × depth matrix [x_0 … x_{T−L}] from T×n time-major states.
Matrix state_matrix(const Matrix& states, Index L);

}  // namespace subfi

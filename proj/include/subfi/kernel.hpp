#pragma once

// Data-driven kernel representation K = [K_u K_y] annihilating healthy
// input/output windows, and residual generation with it.

#include <cstddef>
#include <variant>
#include <vector>

#include "subfi/numlin.hpp"
#include "subfi/system.hpp"

namespace subfi {

struct FixedOrder {
  std::size_t order = 0;
};
/// Order = position of the largest singular-value ratio of L22.
struct GapHeuristic {
  double factor = 10.0;
};
struct Threshold {
  double rel_tol = kDefaultRelTol;
};
using RankPolicy = std::variant<FixedOrder, GapHeuristic, Threshold>;

/// Residual filter for horizon L. Rows of [K_u K_y] are orthonormal and span
/// the left nullspace of the healthy data matrix [U; Y].
struct KernelFilter {
  Index L = 0;
  Index n_u = 0;
  Index n_y = 0;
  Index r = 0;  // residual dimension L·n_y − estimated_n
  std::size_t estimated_n = 0;
  RankPolicy policy = FixedOrder{};

  Matrix K_u;  // r × L·n_u
  Matrix K_y;  // r × L·n_y

  Matrix l21;              // L·n_y × L·n_u block of the LQ factor
  Matrix input_toeplitz;   // L21·L11⁻¹, the recovered input Toeplitz matrix
  SubspaceBasis l21_basis; // range of L21
  SubspaceBasis l22_basis; // dominant estimated_n directions of L22
  Vector l22_singular_values;

  /// [K_u K_y].
  Matrix K() const;
};

/// Fits the filter from healthy data (T×n_u, T×n_y).
/// Errors: WindowTooLong, NotPersistentlyExciting (L11 singular),
/// OrderAmbiguous (no singular-value gap), DimensionMismatch.
KernelFilter estimate_kernel(const Matrix& u, const Matrix& y, Index L, const RankPolicy& policy,
                             double pe_rel_tol = kDefaultRelTol);

/// Model-based filter with the same normalization, used for nominal dictionaries.
KernelFilter nominal_kernel(const StateSpaceModel& model, Index L);

/// Residuals r_k for every window start k = 0..T−L; one row per k.
struct ResidualTrace {
  std::vector<long> k;
  Matrix r;  // (T−L+1) × r

  Index dim() const { return r.cols(); }
  Index size() const { return r.rows(); }
};

ResidualTrace residual(const KernelFilter& filter, const Matrix& u, const Matrix& y);

struct ParityReport {
  double max_abs_ky_obs = 0.0;       // max |K_y·O_L|
  double max_abs_input_term = 0.0;   // max |K_u + K_y·T^u_L|
};

ParityReport parity_check(const KernelFilter& filter, const StateSpaceModel& model);

}  // namespace subfi

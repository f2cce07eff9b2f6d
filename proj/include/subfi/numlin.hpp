#pragma once

// Dense linear-algebra kernels shared by every other module: rank decisions,
// nullspaces, LQ factorization, projections and subspace comparisons.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace subfi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative rank threshold used for noise-free data.
inline constexpr double kDefaultRelTol = 1e-9;

/// Throws InvalidMatrix if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

struct RankDecision {
  std::size_t rank = 0;
  Vector singular_values;  // descending
  double tolerance_used = 0.0;
};

/// Orthonormal column basis of a subspace of R^ambient_dim.
class SubspaceBasis {
 public:
  SubspaceBasis() = default;

  /// Checks orthonormality of the columns to 1e-10.
  SubspaceBasis(Index ambient_dim, Matrix columns);

  static SubspaceBasis empty(Index ambient_dim);
  static SubspaceBasis full(Index ambient_dim);

  Index ambient_dim() const { return ambient_dim_; }
  Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }

 private:
  Index ambient_dim_ = 0;
  Matrix basis_;
};

/// Singular values in descending order.
Vector singular_values(const Matrix& m);

/// rank = #{σ_i > rel_tol·σ_1}; the zero matrix has rank 0.
RankDecision numerical_rank(const Matrix& m, double rel_tol = kDefaultRelTol);

/// cols(m) − rank(m).
std::size_t nullity(const Matrix& m, double rel_tol = kDefaultRelTol);

/// Orthonormal basis N of the left nullspace: Nᵀ·m ≈ 0, dim = rows − rank.
SubspaceBasis left_nullspace(const Matrix& m, double rel_tol = kDefaultRelTol);

/// Orthonormal basis N of the right nullspace: m·N ≈ 0, dim = cols − rank.
SubspaceBasis right_nullspace(const Matrix& m, double rel_tol = kDefaultRelTol);

/// Orthonormal basis of the column space, dimension = numerical rank.
SubspaceBasis range_basis(const Matrix& m, double rel_tol = kDefaultRelTol);

/// m = lower · q_rows with q_rows·q_rowsᵀ = I and diag(lower) ≥ 0.
/// For m of size r×c, lower is r×k and q_rows is k×c with k = min(r, c).
struct LqFactors {
  Matrix lower;
  Matrix q_rows;
};
LqFactors lq_decompose(const Matrix& m);

/// Orthogonal projection of v onto span(basis).
Vector orthogonal_projection(const SubspaceBasis& basis, const Vector& v);

/// Principal angles in ascending order, count = min(dim a, dim b).
std::vector<double> principal_angles(const SubspaceBasis& a, const SubspaceBasis& b);

/// dim(R(p1) ∩ R(p2)) from rank p1 + rank p2 − rank [p1 p2]. The nullity form
/// dim N([p1 p2]) − dim N(p1) − dim N(p2) is evaluated with a pivoted QR and
/// must agree, otherwise InconsistentRankForms is thrown.
std::size_t subspace_intersection_dim(const Matrix& p1, const Matrix& p2,
                                      double rel_tol = kDefaultRelTol);

/// Orthonormal basis of R(p1) ∩ R(p2) with the dimension above.
SubspaceBasis subspace_intersection(const Matrix& p1, const Matrix& p2,
                                    double rel_tol = kDefaultRelTol);

/// Orthonormal basis of the direct sum of several subspaces.
SubspaceBasis direct_sum(const std::vector<const SubspaceBasis*>& parts,
                         double rel_tol = kDefaultRelTol);

/// Order selection from the largest ratio σ_i/σ_{i+1}. Returns the count of
/// values above the gap, or nullopt when no ratio reaches gap_factor.
/// Ratios whose upper value is already at round-off level are ignored.
std::optional<std::size_t> gap_rank(const Vector& singular_values, double gap_factor);

/// Stacks two matrices with equal column counts.
Matrix vstack(const Matrix& top, const Matrix& bottom);
/// Concatenates two matrices with equal row counts.
Matrix hstack(const Matrix& left, const Matrix& right);

}  // namespace subfi

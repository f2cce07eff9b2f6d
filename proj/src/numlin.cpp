#include "subfi/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "subfi/error.hpp"

namespace subfi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InconsistentRankForms: return "InconsistentRankForms";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidSubset: return "InvalidSubset";
    case ErrorCode::InvalidChannel: return "InvalidChannel";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NotPersistentlyExciting: return "NotPersistentlyExciting";
    case ErrorCode::OrderAmbiguous: return "OrderAmbiguous";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::RankToleranceAmbiguous: return "RankToleranceAmbiguous";
    case ErrorCode::TheoremMismatch: return "TheoremMismatch";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NumericallyIllConditioned: return "NumericallyIllConditioned";
    case ErrorCode::ZeroSignalPower: return "ZeroSignalPower";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::InvalidMatrix, std::string(what) + " has non-finite entries");
  }
}

SubspaceBasis::SubspaceBasis(Index ambient_dim, Matrix columns)
    : ambient_dim_(ambient_dim), basis_(std::move(columns)) {
  if (basis_.rows() != ambient_dim_) {
    throw Error(ErrorCode::DimensionMismatch, "basis rows differ from ambient dimension");
  }
  if (basis_.cols() > ambient_dim_) {
    throw Error(ErrorCode::DimensionMismatch, "more basis vectors than ambient dimension");
  }
  require_finite(basis_, "subspace basis");
  if (basis_.cols() > 0) {
    const Matrix gram = basis_.transpose() * basis_;
    const double dev = (gram - Matrix::Identity(basis_.cols(), basis_.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-10) {
      throw Error(ErrorCode::InvalidMatrix, "basis columns are not orthonormal");
    }
  }
}

SubspaceBasis SubspaceBasis::empty(Index ambient_dim) {
  return SubspaceBasis(ambient_dim, Matrix(ambient_dim, 0));
}

SubspaceBasis SubspaceBasis::full(Index ambient_dim) {
  return SubspaceBasis(ambient_dim, Matrix::Identity(ambient_dim, ambient_dim));
}

namespace {

std::size_t count_above(const Vector& sigma, double rel_tol, double* tol_out) {
  const double top = sigma.size() > 0 ? sigma(0) : 0.0;
  const double tol = rel_tol * top;
  if (tol_out != nullptr) *tol_out = tol;
  std::size_t rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > tol) ++rank;
  }
  return rank;
}

}  // namespace

Vector singular_values(const Matrix& m) {
  require_finite(m, "matrix");
  if (m.rows() == 0 || m.cols() == 0) return Vector(0);
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

RankDecision numerical_rank(const Matrix& m, double rel_tol) {
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidMatrix, "rel_tol must be positive");
  RankDecision d;
  d.singular_values = singular_values(m);
  d.rank = count_above(d.singular_values, rel_tol, &d.tolerance_used);
  return d;
}

std::size_t nullity(const Matrix& m, double rel_tol) {
  return static_cast<std::size_t>(m.cols()) - numerical_rank(m, rel_tol).rank;
}

SubspaceBasis left_nullspace(const Matrix& m, double rel_tol) {
  require_finite(m, "matrix");
  const Index rows = m.rows();
  if (rows == 0) return SubspaceBasis::empty(0);
  if (m.cols() == 0) return SubspaceBasis::full(rows);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  const auto rank = static_cast<Index>(count_above(svd.singularValues(), rel_tol, nullptr));
  return SubspaceBasis(rows, svd.matrixU().rightCols(rows - rank));
}

SubspaceBasis right_nullspace(const Matrix& m, double rel_tol) {
  return left_nullspace(m.transpose(), rel_tol);
}

SubspaceBasis range_basis(const Matrix& m, double rel_tol) {
  require_finite(m, "matrix");
  const Index rows = m.rows();
  if (rows == 0 || m.cols() == 0) return SubspaceBasis::empty(rows);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto rank = static_cast<Index>(count_above(svd.singularValues(), rel_tol, nullptr));
  return SubspaceBasis(rows, svd.matrixU().leftCols(rank));
}

LqFactors lq_decompose(const Matrix& m) {
  require_finite(m, "matrix");
  const Index r = m.rows();
  const Index c = m.cols();
  const Index k = std::min(r, c);
  LqFactors out;
  if (k == 0) {
    out.lower = Matrix::Zero(r, 0);
    out.q_rows = Matrix::Zero(0, c);
    return out;
  }
  // mᵀ = Q·R  ⇒  m = Rᵀ·Qᵀ
  Eigen::HouseholderQR<Matrix> qr(m.transpose());
  const Matrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  out.lower = R.transpose();
  out.q_rows = (qr.householderQ() * Matrix::Identity(c, k)).transpose();
  for (Index i = 0; i < k; ++i) {
    if (out.lower(i, i) < 0.0) {
      out.lower.col(i) *= -1.0;
      out.q_rows.row(i) *= -1.0;
    }
  }
  return out;
}

Vector orthogonal_projection(const SubspaceBasis& basis, const Vector& v) {
  if (v.size() != basis.ambient_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "vector length differs from ambient dimension");
  }
  if (basis.dim() == 0) return Vector::Zero(v.size());
  return basis.basis() * (basis.basis().transpose() * v);
}

std::vector<double> principal_angles(const SubspaceBasis& a, const SubspaceBasis& b) {
  if (a.ambient_dim() != b.ambient_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "subspaces live in different ambient spaces");
  }
  std::vector<double> angles;
  if (a.dim() == 0 || b.dim() == 0) return angles;
  // Cosines lose accuracy near zero angle, so small angles come from the sines
  // of the residual of the smaller basis after projection onto the larger.
  const Matrix& small = a.dim() <= b.dim() ? a.basis() : b.basis();
  const Matrix& large = a.dim() <= b.dim() ? b.basis() : a.basis();
  const Vector cosines = singular_values(large.transpose() * small);
  Vector sines = singular_values(small - large * (large.transpose() * small));
  std::sort(sines.begin(), sines.end());
  angles.reserve(static_cast<std::size_t>(cosines.size()));
  for (Index i = 0; i < cosines.size(); ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    angles.push_back(c > std::sqrt(0.5) ? std::asin(std::clamp(sines(i), 0.0, 1.0)) : std::acos(c));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

namespace {

std::size_t qr_nullity(const Matrix& m, double rel_tol) {
  if (m.cols() == 0) return 0;
  if (m.rows() == 0) return static_cast<std::size_t>(m.cols());
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(rel_tol);
  return static_cast<std::size_t>(m.cols() - qr.rank());
}

}  // namespace

std::size_t subspace_intersection_dim(const Matrix& p1, const Matrix& p2, double rel_tol) {
  if (p1.rows() != p2.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "intersection operands need equal row counts");
  }
  const Matrix both = hstack(p1, p2);
  const long r1 = static_cast<long>(numerical_rank(p1, rel_tol).rank);
  const long r2 = static_cast<long>(numerical_rank(p2, rel_tol).rank);
  const long r12 = static_cast<long>(numerical_rank(both, rel_tol).rank);
  const long by_rank = r1 + r2 - r12;

  const long by_nullity = static_cast<long>(qr_nullity(both, rel_tol)) -
                          static_cast<long>(qr_nullity(p1, rel_tol)) -
                          static_cast<long>(qr_nullity(p2, rel_tol));
  if (by_rank != by_nullity || by_rank < 0) {
    throw Error(ErrorCode::InconsistentRankForms,
                "rank form gives " + std::to_string(by_rank) + ", nullity form gives " +
                    std::to_string(by_nullity));
  }
  return static_cast<std::size_t>(by_rank);
}

SubspaceBasis subspace_intersection(const Matrix& p1, const Matrix& p2, double rel_tol) {
  const auto dim = static_cast<Index>(subspace_intersection_dim(p1, p2, rel_tol));
  const Index ambient = p1.rows();
  if (dim == 0) return SubspaceBasis::empty(ambient);
  const SubspaceBasis q1 = range_basis(p1, rel_tol);
  const SubspaceBasis q2 = range_basis(p2, rel_tol);
  Eigen::JacobiSVD<Matrix> svd(q1.basis().transpose() * q2.basis(), Eigen::ComputeThinU);
  Matrix cols = q1.basis() * svd.matrixU().leftCols(dim);
  // Re-orthonormalize against round-off accumulated in the product.
  Eigen::HouseholderQR<Matrix> qr(cols);
  return SubspaceBasis(ambient, qr.householderQ() * Matrix::Identity(ambient, dim));
}

SubspaceBasis direct_sum(const std::vector<const SubspaceBasis*>& parts, double rel_tol) {
  if (parts.empty()) throw Error(ErrorCode::DimensionMismatch, "direct sum of nothing");
  const Index ambient = parts.front()->ambient_dim();
  Matrix stacked(ambient, 0);
  for (const SubspaceBasis* p : parts) {
    if (p->ambient_dim() != ambient) {
      throw Error(ErrorCode::DimensionMismatch, "direct sum operands differ in ambient dimension");
    }
    stacked = hstack(stacked, p->basis());
  }
  return range_basis(stacked, rel_tol);
}

std::optional<std::size_t> gap_rank(const Vector& sigma, double gap_factor) {
  const Index k = sigma.size();
  if (k < 2 || !(sigma(0) > 0.0)) return std::nullopt;
  const double floor = sigma(0) * static_cast<double>(k) * 10.0 *
                       std::numeric_limits<double>::epsilon();
  double best = 0.0;
  Index best_i = -1;
  for (Index i = 0; i + 1 < k; ++i) {
    if (sigma(i) <= floor) break;
    const double ratio = sigma(i + 1) <= floor ? std::numeric_limits<double>::infinity()
                                               : sigma(i) / sigma(i + 1);
    if (ratio > best) {
      best = ratio;
      best_i = i;
    }
    if (std::isinf(ratio)) break;
  }
  if (best_i < 0 || best < gap_factor) return std::nullopt;
  return static_cast<std::size_t>(best_i + 1);
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "vstack column counts differ");
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Matrix hstack(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "hstack row counts differ");
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  out.leftCols(left.cols()) = left;
  out.rightCols(right.cols()) = right;
  return out;
}

}  // namespace subfi

#include "subfi/kernel.hpp"

#include <string>

#include "subfi/data.hpp"
#include "subfi/error.hpp"

namespace subfi {

Matrix KernelFilter::K() const { return hstack(K_u, K_y); }

namespace {

// Orthonormal rows spanning the same row space as raw (raw has full row rank).
Matrix orthonormalize_rows(const Matrix& raw) {
  if (raw.rows() == 0) return raw;
  Eigen::HouseholderQR<Matrix> qr(raw.transpose());
  return (qr.householderQ() * Matrix::Identity(raw.cols(), raw.rows())).transpose();
}

std::size_t select_order(const Vector& sigma, const RankPolicy& policy) {
  return std::visit(
      [&](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedOrder>) {
          return p.order;
        } else if constexpr (std::is_same_v<T, GapHeuristic>) {
          const auto order = gap_rank(sigma, p.factor);
          if (!order) {
            throw Error(ErrorCode::OrderAmbiguous,
                        "no singular-value ratio of L22 reaches " + std::to_string(p.factor));
          }
          return *order;
        } else {
          std::size_t rank = 0;
          const double tol = sigma.size() > 0 ? p.rel_tol * sigma(0) : 0.0;
          for (Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > tol) ++rank;
          }
          return rank;
        }
      },
      policy);
}

}  // namespace

KernelFilter estimate_kernel(const Matrix& u, const Matrix& y, Index L, const RankPolicy& policy,
                             double pe_rel_tol) {
  if (u.rows() != y.rows()) throw Error(ErrorCode::DimensionMismatch, "u and y lengths differ");
  require_finite(u, "u");
  require_finite(y, "y");
  const Index nu = u.cols();
  const Index ny = y.cols();
  const HankelStack U = hankel(u, L);
  const HankelStack Y = hankel(y, L);
  const Index pu = L * nu;
  const Index py = L * ny;
  if (U.depth < pu + py) {
    throw Error(ErrorCode::NotPersistentlyExciting,
                "need at least " + std::to_string(pu + py) + " data columns, have " +
                    std::to_string(U.depth));
  }

  const LqFactors lq = lq_decompose(vstack(U.matrix, Y.matrix));
  const Matrix L11 = lq.lower.topLeftCorner(pu, pu);
  const Matrix L21 = lq.lower.bottomLeftCorner(py, pu);
  const Matrix L22 = lq.lower.bottomRightCorner(py, py);

  if (pu > 0 && numerical_rank(L11, pe_rel_tol).rank != static_cast<std::size_t>(pu)) {
    throw Error(ErrorCode::NotPersistentlyExciting, "L11 is rank deficient");
  }

  Eigen::JacobiSVD<Matrix> svd(L22, Eigen::ComputeFullU);
  const Vector sigma = svd.singularValues();
  const std::size_t order = select_order(sigma, policy);
  if (static_cast<Index>(order) >= py) {
    throw Error(ErrorCode::OrderAmbiguous,
                "estimated order " + std::to_string(order) + " leaves no residual space");
  }
  const Index r = py - static_cast<Index>(order);

  KernelFilter f;
  f.L = L;
  f.n_u = nu;
  f.n_y = ny;
  f.r = r;
  f.estimated_n = order;
  f.policy = policy;
  f.l21 = L21;
  f.input_toeplitz =
      pu > 0 ? Matrix(L11.transpose().triangularView<Eigen::Upper>().solve(L21.transpose()).transpose())
             : Matrix(py, 0);
  f.l21_basis = range_basis(L21);
  f.l22_basis = SubspaceBasis(py, svd.matrixU().leftCols(static_cast<Index>(order)));
  f.l22_singular_values = sigma;

  // K_y annihilates the dominant range of L22; K_u removes the input part.
  const Matrix Ky0 = svd.matrixU().rightCols(r).transpose();
  const Matrix Ku0 = -Ky0 * f.input_toeplitz;
  const Matrix K = orthonormalize_rows(hstack(Ku0, Ky0));
  f.K_u = K.leftCols(pu);
  f.K_y = K.rightCols(py);
  return f;
}

KernelFilter nominal_kernel(const StateSpaceModel& model, Index L) {
  const Matrix O = extended_observability(model, L);
  const Matrix Tu = toeplitz(model, InputAll{}, L);
  const SubspaceBasis parity = left_nullspace(O);
  const Index pu = L * model.n_u();
  const Index py = L * model.n_y();

  KernelFilter f;
  f.L = L;
  f.n_u = model.n_u();
  f.n_y = model.n_y();
  f.r = parity.dim();
  f.estimated_n = static_cast<std::size_t>(py - parity.dim());
  f.policy = FixedOrder{f.estimated_n};
  f.l21 = Tu;
  f.input_toeplitz = Tu;
  f.l21_basis = range_basis(Tu);
  f.l22_basis = range_basis(O);
  f.l22_singular_values = singular_values(O);

  const Matrix Ky0 = parity.basis().transpose();
  const Matrix K = orthonormalize_rows(hstack(-Ky0 * Tu, Ky0));
  f.K_u = K.leftCols(pu);
  f.K_y = K.rightCols(py);
  return f;
}

ResidualTrace residual(const KernelFilter& filter, const Matrix& u, const Matrix& y) {
  if (u.cols() != filter.n_u || y.cols() != filter.n_y) {
    throw Error(ErrorCode::DimensionMismatch, "signal widths differ from the filter's n_u, n_y");
  }
  if (u.rows() != y.rows()) throw Error(ErrorCode::DimensionMismatch, "u and y lengths differ");
  const HankelStack U = hankel(u, filter.L);
  const HankelStack Y = hankel(y, filter.L);
  ResidualTrace out;
  out.r = (filter.K_u * U.matrix + filter.K_y * Y.matrix).transpose();
  out.k.resize(static_cast<std::size_t>(U.depth));
  for (Index j = 0; j < U.depth; ++j) out.k[static_cast<std::size_t>(j)] = static_cast<long>(j);
  return out;
}

ParityReport parity_check(const KernelFilter& filter, const StateSpaceModel& model) {
  if (model.n_u() != filter.n_u || model.n_y() != filter.n_y) {
    throw Error(ErrorCode::DimensionMismatch, "model and filter dimensions differ");
  }
  const Matrix O = extended_observability(model, filter.L);
  const Matrix Tu = toeplitz(model, InputAll{}, filter.L);
  ParityReport rep;
  rep.max_abs_ky_obs = (filter.K_y * O).cwiseAbs().maxCoeff();
  rep.max_abs_input_term =
      Tu.size() > 0 ? (filter.K_u + filter.K_y * Tu).cwiseAbs().maxCoeff() : 0.0;
  return rep;
}

}  // namespace subfi

#include "subfi/data.hpp"

#include <string>

#include "subfi/error.hpp"

namespace subfi {

HankelStack hankel(const Matrix& signal, Index L) {
  const Index T = signal.rows();
  const Index d = signal.cols();
  if (L < 1) throw Error(ErrorCode::OutOfRange, "window length must be >= 1");
  if (L > T) {
    throw Error(ErrorCode::WindowTooLong, "window " + std::to_string(L) + " exceeds " +
                                              std::to_string(T) + " samples");
  }
  HankelStack h;
  h.signal_dim = d;
  h.window = L;
  h.depth = T - L + 1;
  h.matrix.resize(L * d, h.depth);
  for (Index j = 0; j < h.depth; ++j) {
    for (Index i = 0; i < L; ++i) {
      h.matrix.block(i * d, j, d, 1) = signal.row(j + i).transpose();
    }
  }
  return h;
}

Vector window(const Matrix& signal, Index k, Index L) {
  if (L < 1 || k < 0 || k + L > signal.rows()) {
    throw Error(ErrorCode::OutOfRange, "window [" + std::to_string(k) + ", " +
                                           std::to_string(k + L) + ") outside signal");
  }
  const Index d = signal.cols();
  Vector w(L * d);
  for (Index i = 0; i < L; ++i) w.segment(i * d, d) = signal.row(k + i).transpose();
  return w;
}

RankCondition check_rank_condition(const Matrix& states, const HankelStack& u_hankel,
                                   double rel_tol) {
  if (states.cols() != u_hankel.depth) {
    throw Error(ErrorCode::DimensionMismatch, "state matrix depth differs from Hankel depth");
  }
  RankCondition out;
  out.required = static_cast<std::size_t>(states.rows() + u_hankel.window * u_hankel.signal_dim);
  out.rank = numerical_rank(vstack(states, u_hankel.matrix), rel_tol).rank;
  out.satisfied = out.rank == out.required;
  return out;
}

Matrix state_matrix(const Matrix& states, Index L) {
  if (L < 1 || L > states.rows()) throw Error(ErrorCode::WindowTooLong, "window exceeds states");
  return states.topRows(states.rows() - L + 1).transpose();
}

}  // namespace subfi

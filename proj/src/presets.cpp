#include "subfi/presets.hpp"

#include "subfi/error.hpp"

namespace subfi {

namespace {

Matrix printed_A() {
  Matrix A(4, 4);
  A << 0, 1, 0, 0,
       0, 0, 1, 0,
       0, 0, 0, 1,
       -0.136, 0.956, -2.406, 2.580;
  return A;
}

Matrix printed_B() {
  Matrix B(4, 1);
  B << 2.520, 3.147, 2.945, 2.458;
  return B;
}

Matrix printed_C() {
  Matrix C(3, 4);
  C << 1, 0, 0, 0,
       -0.027, 0.083, -0.038, -0.030,
       0.194, -0.868, 1.234, -0.566;
  return C;
}

Matrix printed_D() { return Matrix::Ones(3, 1); }

Matrix printed_K() {
  Matrix K(4, 3);
  K << 0.1760, 0.6259, 0.0686,
       -0.0815, 0.4654, -0.2711,
       -0.288, 0.2886, -0.1961,
       -0.3268, 0.1314, 0.3146;
  return K;
}

Matrix printed_Sigma() {
  Matrix S(3, 3);
  S << 5.25, 4.73, 3.96,
       4.73, 4.87, 3.68,
       3.96, 3.68, 3.59;
  return S;
}

}  // namespace

StateSpaceModel example_printed_model() {
  return StateSpaceModel(printed_A(), printed_B(), printed_C(), printed_D(), printed_K(),
                         printed_Sigma());
}

StateSpaceModel example_model(double shared_zero) {
  const Matrix A = printed_A();
  const Matrix B = printed_B();
  Matrix C = printed_C();
  const Matrix D = printed_D();
  // The transfer C_j (zI − A)⁻¹ B + D_j vanishes at z0 iff C_j v = −D_j with
  // v = (z0 I − A)⁻¹ B; the smallest change of C_j achieving that is along v.
  const Vector v = (shared_zero * Matrix::Identity(4, 4) - A).partialPivLu().solve(B.col(0));
  for (Index row : {Index{0}, Index{2}}) {
    const double delta = -D(row, 0) - C.row(row).dot(v);
    C.row(row) += (delta / v.squaredNorm()) * v.transpose();
  }
  return StateSpaceModel(A, B, C, D, printed_K(), printed_Sigma());
}

StateSpaceModel model_preset(const std::string& name) {
  if (name == "example") return example_model();
  if (name == "example-printed") return example_printed_model();
  throw Error(ErrorCode::NotFound, "unknown model preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"example", "example-printed"}; }

}  // namespace subfi

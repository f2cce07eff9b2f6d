#include "subfi/discern.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "subfi/error.hpp"

namespace subfi {

namespace {

constexpr double kPencilZeroTol = 1e-10;
constexpr double kPencilClearTol = 1e-6;
constexpr double kClusterGap = 1e-6;
constexpr double kAmbiguityDecades = 100.0;

std::size_t as_size(Index i) { return static_cast<std::size_t>(i); }

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Rejects matrices with a singular value close to the rank threshold, where
// the nullity would depend on the exact tolerance.
void require_clear_gap(const Matrix& m, double rel_tol, const std::string& what) {
  const Vector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return;
  const double tol = rel_tol * s(0);
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol / kAmbiguityDecades && s(i) <= tol * kAmbiguityDecades) {
      throw Error(ErrorCode::RankToleranceAmbiguous,
                  what + ": relative singular value " + short_double(s(i) / s(0)) +
                      " lies within two decades of the rank threshold " + short_double(rel_tol));
    }
  }
}

std::size_t toeplitz_rank(const LtiSystem& sys, Index blocks) {
  if (blocks == 0) return 0;
  return numerical_rank(block_toeplitz(sys, blocks)).rank;
}

// Absolute rank with a gray zone; anything between the two bounds is refused.
Index clear_rank(const Vector& sigma, double scale, const char* stage) {
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > kPencilClearTol * scale) {
      ++rank;
    } else if (sigma(i) > kPencilZeroTol * scale) {
      throw Error(ErrorCode::NumericallyIllConditioned,
                  std::string("pencil reduction: unclear rank decision in ") + stage);
    }
  }
  return rank;
}

std::vector<ZeroCluster> cluster_zeros(std::vector<std::complex<double>> zeros) {
  std::sort(zeros.begin(), zeros.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  std::vector<ZeroCluster> out;
  for (const auto& z : zeros) {
    bool merged = false;
    for (auto& c : out) {
      if (std::abs(c.value - z) <= kClusterGap) {
        const double w = static_cast<double>(c.multiplicity);
        c.value = (c.value * w + z) / (w + 1.0);
        ++c.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({z, 1});
  }
  return out;
}

Matrix oracle_block(const StateSpaceModel& model, const std::vector<FaultChannel>& chans, Index L) {
  Matrix m = extended_observability(model, L);
  for (const auto& c : chans) m = hstack(m, toeplitz(model, FaultSet{{c}}, L));
  return m;
}

}  // namespace

bool is_left_invertible(const LtiSystem& sys, std::uint64_t seed) {
  sys.validate();
  const Index n = sys.states();
  const Index m = sys.inputs();
  if (m == 0) return true;
  if (sys.outputs() < m) return false;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int attempt = 0; attempt < 3; ++attempt) {
    const std::complex<double> z = std::polar(radius(rng), phase(rng));
    Eigen::MatrixXcd R(n + sys.outputs(), n + m);
    R.topLeftCorner(n, n) = sys.A.cast<std::complex<double>>() -
                            z * Eigen::MatrixXcd::Identity(n, n);
    R.topRightCorner(n, m) = sys.B.cast<std::complex<double>>();
    R.bottomLeftCorner(sys.outputs(), n) = sys.C.cast<std::complex<double>>();
    R.bottomRightCorner(sys.outputs(), m) = sys.D.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(R);
    const Vector s = svd.singularValues();
    Index rank = 0;
    for (Index i = 0; i < s.size(); ++i) {
      if (s(i) > kDefaultRelTol * s(0)) ++rank;
    }
    if (rank == n + m) return true;
  }
  return false;
}

std::optional<std::size_t> minimal_delay(const LtiSystem& sys, Index L_max, std::uint64_t seed) {
  if (!is_left_invertible(sys, seed)) return std::nullopt;
  const std::size_t m = as_size(sys.inputs());
  std::size_t previous = 0;
  for (Index k = 0; k <= L_max; ++k) {
    const std::size_t current = toeplitz_rank(sys, k + 1);
    if (current - previous == m) return static_cast<std::size_t>(k);
    previous = current;
  }
  return std::nullopt;
}

ZeroCount count_zeros_nullity(const LtiSystem& sys, Index L, double rel_tol) {
  sys.validate();
  if (L < 1) throw Error(ErrorCode::HorizonTooShort, "horizon must be >= 1");
  const Index n = sys.states();
  const auto tau = minimal_delay(sys, std::max(L, n) + 1);
  if (!tau) {
    if (!is_left_invertible(sys)) {
      throw Error(ErrorCode::InvalidModel, "fault subsystem is not left invertible");
    }
    throw Error(ErrorCode::HorizonTooShort, "minimal delay exceeds the horizon");
  }
  const Index bound = std::max<Index>(static_cast<Index>(*tau), n);
  if (L < bound) {
    throw Error(ErrorCode::HorizonTooShort, "L = " + std::to_string(L) + " is below max(tau, n) = " +
                                                std::to_string(bound));
  }
  const Matrix T = block_toeplitz(sys, L);
  const Matrix OT = hstack(observability(sys.A, sys.C, L), T);
  require_clear_gap(OT, rel_tol, "[O_L T_L]");
  require_clear_gap(T, rel_tol, "T_L");

  ZeroCount out;
  out.total = nullity(OT, rel_tol);
  out.infinite = nullity(T, rel_tol);
  if (out.infinite > out.total) {
    throw Error(ErrorCode::RankToleranceAmbiguous, "infinite-zero count exceeds the total");
  }
  out.finite = out.total - out.infinite;
  out.horizon = L;
  out.tau = *tau;
  return out;
}

ZeroCount count_zeros_nullity(const StateSpaceModel& model, const std::vector<FaultChannel>& channels,
                              Index L, const OutputSubset& outputs, double rel_tol) {
  return count_zeros_nullity(model.fault_subsystem(channels, outputs), L, rel_tol);
}

std::size_t data_nullity(const KernelFilter& filter, const Matrix& signature, double rel_tol) {
  if (signature.rows() != filter.K_y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "signature rows differ from L·n_y");
  }
  const std::size_t rank = numerical_rank(filter.K_y * signature, rel_tol).rank;
  return as_size(signature.cols()) - rank;
}

ZeroDynamics zero_dynamic_inputs(const LtiSystem& sys, Index L, double rel_tol) {
  count_zeros_nullity(sys, L, rel_tol);  // horizon and tolerance checks
  const Index n = sys.states();
  const Matrix O = observability(sys.A, sys.C, L);
  const Matrix T = block_toeplitz(sys, L);
  const SubspaceBasis null = right_nullspace(hstack(O, T), rel_tol);

  ZeroDynamics out;
  out.basis = null.basis();
  out.x0 = out.basis.topRows(n);
  out.f0 = out.basis.bottomRows(T.cols());

  const Matrix Ky = left_nullspace(O, rel_tol).basis().transpose();
  const double scale = std::max(1.0, T.norm());
  for (Index j = 0; j < out.f0.cols(); ++j) {
    const double leak = (Ky * T * out.f0.col(j)).norm();
    if (leak > 1e-8 * scale) {
      throw Error(ErrorCode::NumericallyIllConditioned,
                  "zero-dynamic input leaks into the parity space: " + std::to_string(leak));
    }
  }
  return out;
}

LtiSystem augment_pair(const StateSpaceModel& model, const FaultChannel& c1, const FaultChannel& c2) {
  if (c1 == c2) throw Error(ErrorCode::InvalidChannel, "augment_pair needs two distinct channels");
  return model.fault_subsystem({c1, c2});
}

PencilZeros pencil_zero_oracle(const LtiSystem& sys) {
  sys.validate();
  const Index m = sys.inputs();
  Matrix full(sys.states() + sys.outputs(), sys.states() + m);
  full << sys.A, sys.B, sys.C, sys.D;
  const double scale = std::max(1.0, full.size() > 0 ? singular_values(full)(0) : 0.0);

  Matrix A = sys.A, B = sys.B, C = sys.C, D = sys.D;
  while (true) {
    const Index n = A.rows();
    const Index p = C.rows();
    if (p == 0) break;
    Eigen::JacobiSVD<Matrix> svd_d(D, Eigen::ComputeFullU);
    const Index rho = clear_rank(svd_d.singularValues(), scale, "feedthrough");
    if (rho == p) break;

    // Rows of C whose feedthrough part vanishes.
    const Matrix Ut = svd_d.matrixU().transpose();
    const Matrix Ct = Ut * C;
    const Matrix D1 = (Ut * D).topRows(rho);
    const Matrix C1 = Ct.topRows(rho);
    const Matrix C2 = Ct.bottomRows(p - rho);

    if (n == 0) {
      C = C1;
      D = D1;
      continue;
    }
    Eigen::JacobiSVD<Matrix> svd_c(C2, Eigen::ComputeFullV);
    const Index t = clear_rank(svd_c.singularValues(), scale, "output map");
    if (t == 0) {
      C = C1;
      D = D1;
      continue;
    }
    // Split x = W [x1; x2] with x2 the part seen by C2; those states are pinned to 0.
    Matrix W(n, n);
    W << svd_c.matrixV().rightCols(n - t), svd_c.matrixV().leftCols(t);
    const Matrix At = W.transpose() * A * W;
    const Matrix Bt = W.transpose() * B;
    const Matrix C1t = C1 * W;
    const Index k = n - t;

    Matrix nextC(t + rho, k);
    nextC << At.bottomLeftCorner(t, k), C1t.leftCols(k);
    Matrix nextD(t + rho, m);
    nextD << Bt.bottomRows(t), D1;
    A = At.topLeftCorner(k, k);
    B = Bt.topRows(k);
    C = nextC;
    D = nextD;
  }

  if (D.rows() != m) {
    throw Error(ErrorCode::InvalidModel, "system is not left invertible (normal rank deficit)");
  }

  PencilZeros out;
  if (A.rows() > 0) {
    const Matrix Az = A - B * D.partialPivLu().solve(C);
    Eigen::EigenSolver<Matrix> eig(Az, false);
    for (Index i = 0; i < Az.rows(); ++i) out.finite_zeros.push_back(eig.eigenvalues()(i));
  }
  out.clusters = cluster_zeros(out.finite_zeros);

  const auto tau = minimal_delay(sys, sys.states() + 1);
  if (!tau) throw Error(ErrorCode::InvalidModel, "no finite minimal delay");
  const Index horizon = std::max<Index>(static_cast<Index>(*tau), 1);
  out.count.finite = out.finite_zeros.size();
  out.count.infinite = nullity(block_toeplitz(sys, horizon));
  out.count.total = out.count.finite + out.count.infinite;
  out.count.horizon = horizon;
  out.count.tau = *tau;
  return out;
}

std::string to_string(TheoremCase c) {
  switch (c) {
    case TheoremCase::ActAct: return "actuator-actuator";
    case TheoremCase::ActSen: return "actuator-sensor";
    case TheoremCase::SenSenMany: return "sensor-sensor";
    case TheoremCase::SenSenTwo: return "sensor-sensor-two-outputs";
  }
  return "unknown";
}

std::vector<const IntersectionRecord*> DiscernibilityReport::indiscernible() const {
  std::vector<const IntersectionRecord*> out;
  for (const auto& p : pairs) {
    if (p.d_cap > 0) out.push_back(&p);
  }
  return out;
}

const IntersectionRecord& DiscernibilityReport::pair(const FaultChannel& a,
                                                     const FaultChannel& b) const {
  for (const auto& p : pairs) {
    if ((p.first == a && p.second == b) || (p.first == b && p.second == a)) return p;
  }
  throw Error(ErrorCode::NotFound, "no record for pair " + a.label() + ", " + b.label());
}

DiscernibilityReport intersection_report(const FaultDictionarySet& dicts,
                                         const StateSpaceModel* oracle,
                                         const ReportOptions& options) {
  DiscernibilityReport rep;
  rep.L = dicts.L;
  const Index L = dicts.L;
  const std::vector<FaultChannel> chans = dicts.channels();
  const double tol = options.rel_tol;
  const auto sensors = oracle ? oracle->n_y()
                              : std::count_if(chans.begin(), chans.end(), [](const FaultChannel& c) {
                                  return c.kind == ChannelKind::Sensor;
                                });

  if (oracle) {
    bool observable = true;
    for (int j = 1; j <= oracle->n_y(); ++j) {
      const Matrix Oj = extended_observability(*oracle, oracle->n(), std::vector<int>{j});
      if (numerical_rank(Oj, tol).rank != as_size(oracle->n())) observable = false;
    }
    rep.outputs_observable = observable;
    if (!observable) rep.notes.push_back("some single output is unobservable; predictions skipped");
  }

  auto zero_total = [&](const std::vector<FaultChannel>& cs,
                        const OutputSubset& outputs) -> std::optional<std::size_t> {
    try {
      return count_zeros_nullity(*oracle, cs, L, outputs, tol).total;
    } catch (const Error& e) {
      rep.notes.push_back("zero count for {" + cs.front().label() +
                          (cs.size() > 1 ? "," + cs.back().label() : std::string()) +
                          "} unavailable: " + e.what());
      return std::nullopt;
    }
  };

  for (const auto& c : chans) {
    ChannelZeros z;
    z.channel = c;
    z.data_nullity = as_size(L) - dicts.at(c).rank;
    if (oracle) {
      try {
        z.oracle = count_zeros_nullity(*oracle, {c}, L, std::nullopt, tol);
      } catch (const Error& e) {
        rep.notes.push_back("zero count for " + c.label() + " unavailable: " + e.what());
      }
    }
    rep.zeros.push_back(z);
  }

  for (std::size_t i = 0; i < chans.size(); ++i) {
    for (std::size_t j = i + 1; j < chans.size(); ++j) {
      const FaultChannel& a = chans[i];
      const FaultChannel& b = chans[j];
      const FaultDictionary& da = dicts.at(a);
      const FaultDictionary& db = dicts.at(b);
      IntersectionRecord rec;
      rec.first = a;
      rec.second = b;
      const bool a_act = a.kind == ChannelKind::Actuator;
      const bool b_act = b.kind == ChannelKind::Actuator;
      if (a_act && b_act) {
        rec.theorem_case = TheoremCase::ActAct;
      } else if (a_act || b_act) {
        rec.theorem_case = TheoremCase::ActSen;
      } else {
        rec.theorem_case = sensors == 2 ? TheoremCase::SenSenTwo : TheoremCase::SenSenMany;
      }
      rec.d_cap = subspace_intersection_dim(da.matrix, db.matrix, tol);
      rec.basis = subspace_intersection(da.matrix, db.matrix, tol);

      if (oracle) {
        const Matrix Opair = oracle_block(*oracle, {a, b}, L);
        const std::size_t n3 = nullity(Opair, tol);
        const std::size_t n1 = nullity(oracle_block(*oracle, {a}, L), tol);
        const std::size_t n2 = nullity(oracle_block(*oracle, {b}, L), tol);
        if (n3 >= n1 + n2) rec.nullity_form = n3 - n1 - n2;
        if (!rec.nullity_form || *rec.nullity_form != rec.d_cap) {
          const std::string msg = "pair (" + a.label() + ", " + b.label() + "): dictionaries give " +
                                  std::to_string(rec.d_cap) + ", nullity formula gives " +
                                  (rec.nullity_form ? std::to_string(*rec.nullity_form)
                                                    : std::string("negative"));
          if (options.strict) throw Error(ErrorCode::TheoremMismatch, msg);
          rep.notes.push_back(msg);
        }

        if (rec.d_cap > 0) {
          const SubspaceBasis null = right_nullspace(Opair, tol);
          rec.fault_directions = null.basis().bottomRows(2 * L);
        }

        if (rep.outputs_observable.value_or(false)) {
          switch (rec.theorem_case) {
            case TheoremCase::ActAct: {
              const auto zab = zero_total({a, b}, std::nullopt);
              const auto za = zero_total({a}, std::nullopt);
              const auto zb = zero_total({b}, std::nullopt);
              if (zab && za && zb && *zab >= *za + *zb) rec.predicted = *zab - *za - *zb;
              break;
            }
            case TheoremCase::ActSen: {
              const FaultChannel& act = a_act ? a : b;
              const FaultChannel& sen = a_act ? b : a;
              std::vector<int> rest;
              for (int k = 1; k <= oracle->n_y(); ++k) {
                if (k != sen.index) rest.push_back(k);
              }
              if (!rest.empty()) rec.predicted = zero_total({act}, rest);
              break;
            }
            case TheoremCase::SenSenMany: rec.predicted = 0; break;
            case TheoremCase::SenSenTwo: rec.predicted = as_size(oracle->n()); break;
          }
          if (rec.predicted && *rec.predicted != rec.d_cap) {
            rep.notes.push_back("pair (" + a.label() + ", " + b.label() + "): case prediction " +
                                std::to_string(*rec.predicted) + " differs from " +
                                std::to_string(rec.d_cap));
          }
        }
      }
      rep.pairs.push_back(std::move(rec));
    }
  }
  return rep;
}

}  // namespace subfi

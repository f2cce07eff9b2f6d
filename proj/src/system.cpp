#include "subfi/system.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "subfi/error.hpp"

namespace subfi {

namespace {

void require_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " must be " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void LtiSystem::validate() const {
  const Index n = A.rows();
  require_shape(A, n, n, "A");
  if (B.rows() != n) throw Error(ErrorCode::DimensionMismatch, "B rows must equal state dimension");
  if (C.cols() != n) throw Error(ErrorCode::DimensionMismatch, "C cols must equal state dimension");
  require_shape(D, C.rows(), B.cols(), "D");
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(C, "C");
  require_finite(D, "D");
}

std::string FaultChannel::label() const {
  return (kind == ChannelKind::Actuator ? "a" : "s") + std::to_string(index);
}

FaultChannel FaultChannel::parse(std::string_view label) {
  if (label.size() < 2 || (label[0] != 'a' && label[0] != 's')) {
    throw Error(ErrorCode::InvalidChannel, "cannot parse channel '" + std::string(label) + "'");
  }
  int index = 0;
  for (char ch : label.substr(1)) {
    if (ch < '0' || ch > '9') {
      throw Error(ErrorCode::InvalidChannel, "cannot parse channel '" + std::string(label) + "'");
    }
    index = index * 10 + (ch - '0');
  }
  if (index < 1) throw Error(ErrorCode::InvalidChannel, "channel index must be >= 1");
  return {label[0] == 'a' ? ChannelKind::Actuator : ChannelKind::Sensor, index};
}

StateSpaceModel::StateSpaceModel(Matrix A, Matrix B_u, Matrix C, Matrix D_u, Matrix K,
                                 Matrix Sigma_e)
    : A_(std::move(A)), B_u_(std::move(B_u)), C_(std::move(C)), D_u_(std::move(D_u)),
      K_(std::move(K)), Sigma_e_(std::move(Sigma_e)) {
  LtiSystem{A_, B_u_, C_, D_u_}.validate();
  const Index n = A_.rows();
  const Index ny = C_.rows();
  if (K_.size() == 0) K_ = Matrix::Zero(n, ny);
  if (Sigma_e_.size() == 0) Sigma_e_ = Matrix::Zero(ny, ny);
  require_shape(K_, n, ny, "K");
  require_shape(Sigma_e_, ny, ny, "Sigma_e");
  require_finite(K_, "K");
  require_finite(Sigma_e_, "Sigma_e");

  const double scale = std::max(1.0, Sigma_e_.cwiseAbs().maxCoeff());
  if ((Sigma_e_ - Sigma_e_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidModel, "Sigma_e is not symmetric");
  }
  if (ny > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Sigma_e_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
      throw Error(ErrorCode::InvalidModel, "Sigma_e is not positive semidefinite");
    }
  }
  if (n > 0 && numerical_rank(observability(A_, C_, n)).rank != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::InvalidModel, "(A, C) is not observable");
  }
}

std::vector<FaultChannel> StateSpaceModel::channels() const {
  std::vector<FaultChannel> out;
  for (int i = 1; i <= n_u(); ++i) out.push_back(FaultChannel::actuator(i));
  for (int i = 1; i <= n_y(); ++i) out.push_back(FaultChannel::sensor(i));
  return out;
}

void StateSpaceModel::check_channel(const FaultChannel& c) const {
  const Index limit = c.kind == ChannelKind::Actuator ? n_u() : n_y();
  if (c.index < 1 || c.index > limit) {
    throw Error(ErrorCode::InvalidChannel, "channel " + c.label() + " does not exist");
  }
}

StateSpaceModel StateSpaceModel::with_noise_scale(double scale) const {
  return StateSpaceModel(A_, B_u_, C_, D_u_, K_, scale * Sigma_e_);
}

LtiSystem StateSpaceModel::input_system() const { return {A_, B_u_, C_, D_u_}; }

std::pair<Matrix, Matrix> StateSpaceModel::fault_matrices(
    const std::vector<FaultChannel>& channels) const {
  const auto nf = static_cast<Index>(channels.size());
  Matrix B_f = Matrix::Zero(n(), nf);
  Matrix D_f = Matrix::Zero(n_y(), nf);
  for (Index j = 0; j < nf; ++j) {
    const FaultChannel& c = channels[static_cast<std::size_t>(j)];
    check_channel(c);
    if (c.kind == ChannelKind::Actuator) {
      B_f.col(j) = B_u_.col(c.index - 1);
      D_f.col(j) = D_u_.col(c.index - 1);
    } else {
      D_f(c.index - 1, j) = 1.0;
    }
  }
  return {B_f, D_f};
}

LtiSystem StateSpaceModel::fault_subsystem(const std::vector<FaultChannel>& channels,
                                           const OutputSubset& outputs) const {
  auto [B_f, D_f] = fault_matrices(channels);
  LtiSystem sys{A_, B_f, C_, D_f};
  if (outputs) {
    sys.C = select_output_rows(C_, n_y(), *outputs);
    sys.D = select_output_rows(D_f, n_y(), *outputs);
  }
  return sys;
}

// --- scenarios ---------------------------------------------------------------

double evaluate(const FaultSignal& signal, long k, long segment_start) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ZeroSignal>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, ConstantSignal>) {
          return s.value;
        } else if constexpr (std::is_same_v<T, SinusoidSignal>) {
          return s.amplitude *
                 std::sin(2.0 * std::numbers::pi * s.frequency * static_cast<double>(k) + s.phase);
        } else if constexpr (std::is_same_v<T, GeometricDecaySignal>) {
          return std::pow(s.base, static_cast<double>(k - s.offset));
        } else if constexpr (std::is_same_v<T, StepSignal>) {
          return s.level;
        } else {
          const long i = k - segment_start;
          if (i < 0 || i >= static_cast<long>(s.values.size())) return 0.0;
          return s.values[static_cast<std::size_t>(i)];
        }
      },
      signal);
}

void FaultScenario::validate(long samples) const {
  std::vector<const FaultSegment*> sorted;
  for (const FaultSegment& seg : segments) {
    if (seg.start < 0 || seg.end > samples || seg.start >= seg.end) {
      throw Error(ErrorCode::InvalidScenario,
                  "segment [" + std::to_string(seg.start) + ", " + std::to_string(seg.end) +
                      ") is empty or outside [0, " + std::to_string(samples) + ")");
    }
    if (seg.channel.index < 1) throw Error(ErrorCode::InvalidScenario, "bad channel index");
    sorted.push_back(&seg);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const FaultSegment* a, const FaultSegment* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end) {
      throw Error(ErrorCode::InvalidScenario,
                  "segments overlap at k=" + std::to_string(sorted[i]->start) +
                      " (only one fault may be active at a time)");
    }
  }
}

std::optional<std::size_t> FaultScenario::active_segment(long k) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (k >= segments[i].start && k < segments[i].end) return i;
  }
  return std::nullopt;
}

void TrajectoryData::validate() const {
  const Index T = u.rows();
  if (y.rows() != T) throw Error(ErrorCode::DimensionMismatch, "u and y lengths differ");
  if (!f_channel.empty() && static_cast<Index>(f_channel.size()) != T) {
    throw Error(ErrorCode::DimensionMismatch, "fault annotation length differs");
  }
  if (f_value.size() != 0 && f_value.size() != T) {
    throw Error(ErrorCode::DimensionMismatch, "fault value length differs");
  }
  if (e && e->rows() != T) throw Error(ErrorCode::DimensionMismatch, "innovation length differs");
  if (x && x->rows() != T) throw Error(ErrorCode::DimensionMismatch, "state length differs");
  require_finite(u, "u");
  require_finite(y, "y");
}

// --- simulation --------------------------------------------------------------

Matrix gaussian_noise(const Matrix& sigma, Index samples, std::uint64_t seed) {
  const Index d = sigma.rows();
  require_shape(sigma, d, d, "noise covariance");
  Matrix out = Matrix::Zero(samples, d);
  if (d == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw Error(ErrorCode::InvalidModel, "noise covariance is not positive semidefinite");
  }
  const Matrix factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(d);
  for (Index k = 0; k < samples; ++k) {
    for (Index i = 0; i < d; ++i) z(i) = normal(rng);
    out.row(k) = (factor * z).transpose();
  }
  return out;
}

namespace {

// fault_term(k, bx, dy) adds the fault contribution to the state update and output.
TrajectoryData run_recursion(const StateSpaceModel& model, const Matrix& input, Noise noise,
                             const Vector& x0_in,
                             const std::function<void(Index, Vector&, Vector&)>& fault_term) {
  const Index T = input.rows();
  const Index n = model.n();
  const Index ny = model.n_y();
  if (T < 1) throw Error(ErrorCode::DimensionMismatch, "input must have at least one sample");
  if (input.cols() != model.n_u()) {
    throw Error(ErrorCode::DimensionMismatch, "input width differs from n_u");
  }
  require_finite(input, "input");
  const Vector x0 = x0_in.size() == 0 ? Vector::Zero(n) : x0_in;
  if (x0.size() != n) throw Error(ErrorCode::DimensionMismatch, "x0 length differs from n");

  TrajectoryData traj;
  traj.u = input;
  traj.y = Matrix::Zero(T, ny);
  traj.x = Matrix::Zero(T, n);
  traj.e = noise.enabled ? gaussian_noise(model.Sigma_e(), T, noise.seed) : Matrix::Zero(T, ny);
  traj.x0 = x0;

  Vector x = x0;
  Vector bx(n);
  Vector dy(ny);
  for (Index k = 0; k < T; ++k) {
    bx.setZero();
    dy.setZero();
    fault_term(k, bx, dy);
    const Vector uk = input.row(k).transpose();
    const Vector ek = traj.e->row(k).transpose();
    traj.x->row(k) = x.transpose();
    traj.y.row(k) = (model.C() * x + model.D_u() * uk + dy + ek).transpose();
    x = model.A() * x + model.B_u() * uk + bx + model.K() * ek;
  }
  return traj;
}

}  // namespace

TrajectoryData simulate(const StateSpaceModel& model, const Matrix& input,
                        const FaultScenario& scenario, Noise noise, const Vector& x0) {
  scenario.validate(static_cast<long>(input.rows()));
  for (const FaultSegment& seg : scenario.segments) model.check_channel(seg.channel);

  const Index T = input.rows();
  std::vector<std::optional<FaultChannel>> channel(static_cast<std::size_t>(T));
  Vector value = Vector::Zero(T);
  auto term = [&](Index k, Vector& bx, Vector& dy) {
    const auto seg_index = scenario.active_segment(static_cast<long>(k));
    if (!seg_index) return;
    const FaultSegment& seg = scenario.segments[*seg_index];
    const double f = evaluate(seg.signal, static_cast<long>(k), seg.start);
    channel[static_cast<std::size_t>(k)] = seg.channel;
    value(k) = f;
    if (seg.channel.kind == ChannelKind::Actuator) {
      bx += f * model.B_u().col(seg.channel.index - 1);
      dy += f * model.D_u().col(seg.channel.index - 1);
    } else {
      dy(seg.channel.index - 1) += f;
    }
  };
  TrajectoryData traj = run_recursion(model, input, noise, x0, term);
  traj.f_channel = std::move(channel);
  traj.f_value = std::move(value);
  return traj;
}

TrajectoryData simulate_with_faults(const StateSpaceModel& model, const Matrix& input,
                                    const Matrix& B_f, const Matrix& D_f, const Matrix& faults,
                                    Noise noise, const Vector& x0) {
  const Index nf = faults.cols();
  require_shape(B_f, model.n(), nf, "B_f");
  require_shape(D_f, model.n_y(), nf, "D_f");
  if (faults.rows() != input.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "fault signal length differs from input");
  }
  require_finite(faults, "fault signal");
  auto term = [&](Index k, Vector& bx, Vector& dy) {
    const Vector fk = faults.row(k).transpose();
    bx += B_f * fk;
    dy += D_f * fk;
  };
  return run_recursion(model, input, noise, x0, term);
}

Matrix simulate_lti(const LtiSystem& sys, const Matrix& input, const Vector& x0_in) {
  sys.validate();
  if (input.cols() != sys.inputs()) {
    throw Error(ErrorCode::DimensionMismatch, "input width differs from system inputs");
  }
  const Vector x0 = x0_in.size() == 0 ? Vector::Zero(sys.states()) : x0_in;
  if (x0.size() != sys.states()) throw Error(ErrorCode::DimensionMismatch, "x0 length");
  Matrix y(input.rows(), sys.outputs());
  Vector x = x0;
  for (Index k = 0; k < input.rows(); ++k) {
    const Vector uk = input.row(k).transpose();
    y.row(k) = (sys.C * x + sys.D * uk).transpose();
    x = sys.A * x + sys.B * uk;
  }
  return y;
}

// --- model-based matrices ----------------------------------------------------

std::vector<Matrix> markov_parameters(const LtiSystem& sys, Index L) {
  sys.validate();
  if (L < 1) throw Error(ErrorCode::OutOfRange, "horizon must be >= 1");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(L));
  out.push_back(sys.D);
  Matrix CAk = sys.C;  // C A^{i−1}
  for (Index i = 1; i < L; ++i) {
    out.push_back(CAk * sys.B);
    CAk = CAk * sys.A;
  }
  return out;
}

namespace {

LtiSystem system_for(const StateSpaceModel& model, const ChannelSet& set) {
  return std::visit(
      [&](const auto& s) -> LtiSystem {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InputAll>) {
          return model.input_system();
        } else if constexpr (std::is_same_v<T, FaultSet>) {
          return model.fault_subsystem(s.channels);
        } else {
          return LtiSystem{model.A(), model.K(), model.C(),
                           Matrix::Identity(model.n_y(), model.n_y())};
        }
      },
      set);
}

void check_subset(const std::vector<int>& outputs, Index n_y) {
  if (outputs.empty()) throw Error(ErrorCode::InvalidSubset, "output subset is empty");
  std::set<int> seen;
  for (int o : outputs) {
    if (o < 1 || o > n_y) {
      throw Error(ErrorCode::InvalidSubset, "output " + std::to_string(o) + " out of range");
    }
    if (!seen.insert(o).second) {
      throw Error(ErrorCode::InvalidSubset, "output " + std::to_string(o) + " repeated");
    }
  }
}

}  // namespace

std::vector<Matrix> markov_parameters(const StateSpaceModel& model, const ChannelSet& set,
                                      Index L) {
  return markov_parameters(system_for(model, set), L);
}

Matrix observability(const Matrix& A, const Matrix& C, Index L) {
  if (L < 1) throw Error(ErrorCode::OutOfRange, "horizon must be >= 1");
  const Index p = C.rows();
  Matrix out(L * p, A.cols());
  Matrix CAk = C;
  for (Index i = 0; i < L; ++i) {
    out.middleRows(i * p, p) = CAk;
    CAk = CAk * A;
  }
  return out;
}

Matrix extended_observability(const StateSpaceModel& model, Index L, const OutputSubset& outputs) {
  if (outputs) {
    check_subset(*outputs, model.n_y());
    return observability(model.A(), select_output_rows(model.C(), model.n_y(), *outputs), L);
  }
  return observability(model.A(), model.C(), L);
}

Matrix block_toeplitz(const LtiSystem& sys, Index L) {
  const std::vector<Matrix> markov = markov_parameters(sys, L);
  const Index p = sys.outputs();
  const Index m = sys.inputs();
  Matrix out = Matrix::Zero(L * p, L * m);
  for (Index i = 0; i < L; ++i) {
    for (Index j = 0; j <= i; ++j) {
      out.block(i * p, j * m, p, m) = markov[static_cast<std::size_t>(i - j)];
    }
  }
  return out;
}

Matrix toeplitz(const StateSpaceModel& model, const ChannelSet& set, Index L,
                const OutputSubset& outputs) {
  LtiSystem sys = system_for(model, set);
  if (outputs) {
    check_subset(*outputs, model.n_y());
    sys.C = select_output_rows(sys.C, model.n_y(), *outputs);
    sys.D = select_output_rows(sys.D, model.n_y(), *outputs);
  }
  return block_toeplitz(sys, L);
}

Matrix select_output_rows(const Matrix& m, Index n_y, const std::vector<int>& outputs) {
  check_subset(outputs, n_y);
  if (n_y == 0 || m.rows() % n_y != 0) {
    throw Error(ErrorCode::DimensionMismatch, "row count is not a multiple of n_y");
  }
  const Index blocks = m.rows() / n_y;
  const auto q = static_cast<Index>(outputs.size());
  Matrix out(blocks * q, m.cols());
  for (Index b = 0; b < blocks; ++b) {
    for (Index i = 0; i < q; ++i) {
      out.row(b * q + i) = m.row(b * n_y + outputs[static_cast<std::size_t>(i)] - 1);
    }
  }
  return out;
}

// --- inputs ------------------------------------------------------------------

namespace {

// Maximal-length feedback taps (1-based bit positions), 3..32 bits.
const std::vector<int>& lfsr_taps(int bits) {
  static const std::array<std::vector<int>, 33> table = {{
      {}, {}, {},
      {3, 2}, {4, 3}, {5, 3}, {6, 5}, {7, 6}, {8, 6, 5, 4}, {9, 5}, {10, 7},
      {11, 9}, {12, 6, 4, 1}, {13, 4, 3, 1}, {14, 5, 3, 1}, {15, 14}, {16, 15, 13, 4},
      {17, 14}, {18, 11}, {19, 6, 2, 1}, {20, 17}, {21, 19}, {22, 21}, {23, 18},
      {24, 23, 22, 17}, {25, 22}, {26, 6, 2, 1}, {27, 5, 2, 1}, {28, 25}, {29, 27},
      {30, 6, 4, 1}, {31, 28}, {32, 22, 2, 1},
  }};
  if (bits < 3 || bits > 32) {
    throw Error(ErrorCode::InvalidConfig, "PRBS register length must be in [3, 32]");
  }
  return table[static_cast<std::size_t>(bits)];
}

class Lfsr {
 public:
  Lfsr(int bits, std::uint64_t seed) : bits_(bits), taps_(lfsr_taps(bits)) {
    mask_ = bits == 64 ? ~0ULL : ((1ULL << bits) - 1);
    state_ = splitmix64(seed) & mask_;
    if (state_ == 0) state_ = 1;
  }

  int next() {
    const int out = static_cast<int>((state_ >> (bits_ - 1)) & 1U);
    std::uint64_t fb = 0;
    for (int t : taps_) fb ^= (state_ >> (t - 1)) & 1U;
    state_ = ((state_ << 1) | fb) & mask_;
    return out;
  }

 private:
  int bits_;
  const std::vector<int>& taps_;
  std::uint64_t mask_ = 0;
  std::uint64_t state_ = 1;
};

}  // namespace

std::vector<int> lfsr_bits(int register_bits, std::uint64_t seed, std::size_t count) {
  Lfsr reg(register_bits, seed);
  std::vector<int> out(count);
  for (auto& b : out) b = reg.next();
  return out;
}

Matrix generate_input(const InputKind& kind, Index samples, Index n_u) {
  if (samples < 1) throw Error(ErrorCode::OutOfRange, "input length must be >= 1");
  Matrix u = Matrix::Zero(samples, n_u);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PrbsInput>) {
          if (s.hold < 1) throw Error(ErrorCode::InvalidConfig, "PRBS hold must be >= 1");
          for (Index c = 0; c < n_u; ++c) {
            Lfsr reg(s.register_bits, s.seed + 0x632BE59BD9B4E019ULL * static_cast<std::uint64_t>(c));
            int bit = 0;
            for (Index k = 0; k < samples; ++k) {
              if (k % s.hold == 0) bit = reg.next();
              u(k, c) = bit != 0 ? s.level : -s.level;
            }
          }
        } else if constexpr (std::is_same_v<T, MultiStepInput>) {
          if (s.values.empty() || s.dwell < 1) {
            throw Error(ErrorCode::InvalidConfig, "multi-step input needs values and dwell >= 1");
          }
          for (Index k = 0; k < samples; ++k) {
            const auto i = static_cast<std::size_t>(k / s.dwell) % s.values.size();
            u.row(k).setConstant(s.values[i]);
          }
        } else if constexpr (std::is_same_v<T, ImpulseInput>) {
          u.row(0).setOnes();
        }
      },
      kind);
  return u;
}

}  // namespace subfi

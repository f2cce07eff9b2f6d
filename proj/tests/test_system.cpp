#include <doctest.h>

#include <complex>
#include <random>
#include <set>

#include "subfi/data.hpp"
#include "subfi/error.hpp"
#include "subfi/presets.hpp"
#include "subfi/system.hpp"
#include "support/systems.hpp"

using namespace subfi;
using subfi::testing::error_code;
using subfi::testing::max_abs;
using subfi::testing::random_matrix;

namespace {

// Values frozen from tests/oracles/derive.py.
constexpr double kCorrectedRow1[4] = {1.0003368287272898, 0.02332269473591288, 0.050882560129822,
                                      0.0752205644350327};
constexpr double kCorrectedRow3[4] = {0.1943483744458715, -0.8438778566180184, 1.2866266979434366,
                                      -0.4882010466148466};
constexpr double kMarkov[3][3] = {
    {2.9289866156903246, 0.00751100000000002, 0.42319174169081997},
    {3.4863721955622324, 0.00840853999999996, 0.35070648642048785},
    {3.208795926586322, 0.00852095720000001, 0.27177373679614636},
};

std::complex<double> transfer(const StateSpaceModel& m, int output, std::complex<double> z) {
  using CM = Eigen::MatrixXcd;
  const CM resolvent = z * CM::Identity(m.n(), m.n()) - m.A().cast<std::complex<double>>();
  const Eigen::VectorXcd v =
      resolvent.partialPivLu().solve(m.B_u().col(0).cast<std::complex<double>>());
  return (m.C().row(output).cast<std::complex<double>>() * v)(0) + m.D_u()(output, 0);
}

FaultScenario scenario1() {
  FaultScenario s;
  s.segments.push_back({10, 70, FaultChannel::actuator(1), SinusoidSignal{1.0, 0.1, 0.0}});
  s.segments.push_back({70, 130, FaultChannel::actuator(1), GeometricDecaySignal{0.95, 70}});
  s.segments.push_back({130, 200, FaultChannel::actuator(1), ConstantSignal{-0.5}});
  return s;
}

}  // namespace

TEST_CASE("example preset keeps printed rows and corrects C rows 1 and 3") {
  const StateSpaceModel printed = example_printed_model();
  const StateSpaceModel m = example_model();
  CHECK(m.A() == printed.A());
  CHECK(m.B_u() == printed.B_u());
  CHECK(m.D_u() == printed.D_u());
  CHECK(m.C().row(1) == printed.C().row(1));
  CHECK(m.K() == printed.K());
  CHECK(m.Sigma_e() == printed.Sigma_e());
  for (int j = 0; j < 4; ++j) {
    CHECK(m.C()(0, j) == doctest::Approx(kCorrectedRow1[j]).epsilon(1e-12));
    CHECK(m.C()(2, j) == doctest::Approx(kCorrectedRow3[j]).epsilon(1e-12));
  }
  CHECK(std::abs(transfer(m, 0, 0.95)) < 1e-12);
  CHECK(std::abs(transfer(m, 2, 0.95)) < 1e-12);
  CHECK(std::abs(transfer(m, 1, 0.95)) > 1e-3);
  CHECK(std::abs(transfer(printed, 0, 0.95)) > 1e-3);
}

TEST_CASE("model presets by name") {
  CHECK(model_preset("example").C() == example_model().C());
  CHECK(model_preset("example-printed").C() == example_printed_model().C());
  CHECK(error_code([] { model_preset("nope"); }) == ErrorCode::NotFound);
  CHECK(preset_names().size() == 2);
}

TEST_CASE("StateSpaceModel validation") {
  const Matrix A = Matrix::Identity(2, 2) * 0.5;
  const Matrix B = Matrix::Ones(2, 1);
  Matrix C(1, 2);
  C << 1, 0;
  CHECK(error_code([&] { StateSpaceModel(A, B, C, Matrix::Zero(1, 1)); }) == ErrorCode::InvalidModel);
  Matrix Cobs(1, 2);
  Cobs << 1, 0;
  Matrix Aobs(2, 2);
  Aobs << 0.5, 1, 0, 0.3;
  CHECK_NOTHROW(StateSpaceModel(Aobs, B, Cobs, Matrix::Zero(1, 1)));
  CHECK(error_code([&] { StateSpaceModel(Aobs, B, Cobs, Matrix::Zero(2, 1)); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(error_code([&] {
          StateSpaceModel(Aobs, B, Cobs, Matrix::Zero(1, 1), Matrix::Zero(2, 1), -Matrix::Ones(1, 1));
        }) == ErrorCode::InvalidModel);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  Matrix C2 = Matrix::Identity(2, 2);
  CHECK(error_code([&] {
          StateSpaceModel(Aobs, B, C2, Matrix::Zero(2, 1), Matrix::Zero(2, 2), asym);
        }) == ErrorCode::InvalidModel);
  Matrix bad = Aobs;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_code([&] { StateSpaceModel(bad, B, Cobs, Matrix::Zero(1, 1)); }) ==
        ErrorCode::InvalidMatrix);
}

TEST_CASE("fault channel labels, parsing and ordering") {
  CHECK(FaultChannel::actuator(1).label() == "a1");
  CHECK(FaultChannel::parse("s12") == FaultChannel::sensor(12));
  CHECK(error_code([] { FaultChannel::parse("x1"); }) == ErrorCode::InvalidChannel);
  CHECK(error_code([] { FaultChannel::parse("a"); }) == ErrorCode::InvalidChannel);
  CHECK(FaultChannel::actuator(2) < FaultChannel::sensor(1));
  CHECK(FaultChannel::sensor(1) < FaultChannel::sensor(2));
  const StateSpaceModel m = example_model();
  CHECK(m.channels().size() == 4);
  CHECK(error_code([&] { m.check_channel(FaultChannel::sensor(4)); }) == ErrorCode::InvalidChannel);
  CHECK(error_code([&] { m.check_channel(FaultChannel::actuator(2)); }) == ErrorCode::InvalidChannel);
}

TEST_CASE("fault-channel materialization") {
  std::mt19937_64 rng(31);
  const StateSpaceModel m = subfi::testing::random_model(rng, 3, 2, 3);
  auto [B_f, D_f] = m.fault_matrices({FaultChannel::actuator(2), FaultChannel::sensor(3)});
  CHECK(B_f.col(0) == m.B_u().col(1));
  CHECK(D_f.col(0) == m.D_u().col(1));
  CHECK(B_f.col(1) == Vector::Zero(3));
  CHECK(D_f.col(1) == Vector::Unit(3, 2));
}

TEST_CASE("zero input, zero state and no fault give zero output") {
  const StateSpaceModel m = example_model();
  const TrajectoryData t = simulate(m, generate_input(ZeroInput{}, 10, 1), {}, Noise::off());
  CHECK(t.y.isZero(0.0));
  CHECK(t.samples() == 10);
}

TEST_CASE("impulse response equals the Markov parameters") {
  const StateSpaceModel m = example_model();
  const TrajectoryData t = simulate(m, generate_input(ImpulseInput{}, 6, 1), {}, Noise::off());
  const std::vector<Matrix> M = markov_parameters(m, InputAll{}, 6);
  for (Index k = 0; k < 6; ++k) {
    CHECK((t.y.row(k).transpose() - M[std::size_t(k)].col(0)).norm() < 1e-12);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(M[std::size_t(i + 1)](j, 0) == doctest::Approx(kMarkov[i][j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("Markov parameter base cases") {
  const StateSpaceModel m = example_model();
  const std::vector<Matrix> u = markov_parameters(m, InputAll{}, 1);
  REQUIRE(u.size() == 1);
  CHECK(u[0] == m.D_u());
  const std::vector<Matrix> e = markov_parameters(m, Innovation{}, 2);
  CHECK(e[0] == Matrix::Identity(3, 3));
  CHECK((e[1] - m.C() * m.K()).norm() < 1e-15);
  const std::vector<Matrix> s = markov_parameters(m, FaultSet{{FaultChannel::sensor(2)}}, 3);
  CHECK(s[0] == Matrix(Vector::Unit(3, 1)));
  CHECK(s[1].isZero(0.0));
}

TEST_CASE("extended observability matrices") {
  const StateSpaceModel m = example_model();
  CHECK(extended_observability(m, 1) == m.C());
  const Matrix O = extended_observability(m, 5);
  CHECK(O.rows() == 15);
  CHECK(O.cols() == 4);
  CHECK(numerical_rank(O).rank == 4);
  const Matrix O13 = extended_observability(m, 5, std::vector<int>{1, 3});
  CHECK(O13.rows() == 10);
  CHECK(numerical_rank(O13).rank == 4);
  CHECK(O13.row(2) == O.row(3));
  CHECK(error_code([&] { extended_observability(m, 5, std::vector<int>{}); }) ==
        ErrorCode::InvalidSubset);
  CHECK(error_code([&] { extended_observability(m, 5, std::vector<int>{4}); }) ==
        ErrorCode::InvalidSubset);
  CHECK(error_code([&] { extended_observability(m, 5, std::vector<int>{1, 1}); }) ==
        ErrorCode::InvalidSubset);
}

TEST_CASE("Toeplitz matrices") {
  const StateSpaceModel m = example_model();
  const Matrix T2 = toeplitz(m, InputAll{}, 2);
  CHECK(T2.block(0, 0, 3, 1) == m.D_u());
  CHECK(T2.block(0, 1, 3, 1).isZero(0.0));
  CHECK((T2.block(3, 0, 3, 1) - m.C() * m.B_u()).norm() < 1e-15);
  CHECK(T2.block(3, 1, 3, 1) == m.D_u());

  const Index L = 5;
  const Matrix Ts = toeplitz(m, FaultSet{{FaultChannel::sensor(2)}}, L);
  Matrix expected = Matrix::Zero(15, 5);
  for (Index t = 0; t < L; ++t) expected(t * 3 + 1, t) = 1.0;
  CHECK(Ts == expected);

  CHECK(toeplitz(m, FaultSet{{FaultChannel::actuator(1)}}, L) == toeplitz(m, InputAll{}, L));
  const Matrix T13 = toeplitz(m, InputAll{}, L, std::vector<int>{1, 3});
  CHECK(T13.rows() == 10);
  CHECK(T13 == select_output_rows(toeplitz(m, InputAll{}, L), 3, {1, 3}));
}

TEST_CASE("input generators") {
  CHECK(generate_input(ZeroInput{}, 10, 2).isZero(0.0));
  const Matrix ms = generate_input(MultiStepInput{{1, 2, 1.5}, 3}, 12, 1);
  const double expected[12] = {1, 1, 1, 2, 2, 2, 1.5, 1.5, 1.5, 1, 1, 1};
  for (int k = 0; k < 12; ++k) CHECK(ms(k, 0) == expected[k]);
  const Matrix imp = generate_input(ImpulseInput{}, 4, 2);
  CHECK(imp.row(0) == Eigen::RowVector2d(1, 1));
  CHECK(imp.bottomRows(3).isZero(0.0));

  const Matrix p1 = generate_input(PrbsInput{0.7, 42}, 500, 2);
  CHECK(p1 == generate_input(PrbsInput{0.7, 42}, 500, 2));
  CHECK(p1 != generate_input(PrbsInput{0.7, 43}, 500, 2));
  CHECK((p1.array().abs() == 0.7).all());
  CHECK(p1.col(0) != p1.col(1));
  const Matrix held = generate_input(PrbsInput{1.0, 5, 10, 4}, 40, 1);
  for (Index k = 0; k < 40; ++k) CHECK(held(k, 0) == held(k - k % 4, 0));
  CHECK(error_code([] { generate_input(ZeroInput{}, 0, 1); }) == ErrorCode::OutOfRange);
}

TEST_CASE("LFSR sequences have maximal period") {
  for (int bits : {3, 5, 7, 10, 12}) {
    const std::size_t period = (std::size_t{1} << bits) - 1;
    const std::vector<int> seq = lfsr_bits(bits, 99, 2 * period);
    for (std::size_t i = 0; i < period; ++i) CHECK(seq[i] == seq[i + period]);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < period; ++i) ones += std::size_t(seq[i]);
    CHECK(ones == (period + 1) / 2);
    for (std::size_t p = 1; p < period; ++p) {
      if (period % p != 0) continue;
      bool repeats = true;
      for (std::size_t i = 0; i + p < period && repeats; ++i) repeats = seq[i] == seq[i + p];
      CHECK_FALSE(repeats);
    }
  }
  CHECK(error_code([] { lfsr_bits(2, 1, 4); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("PRBS seed 42 is persistently exciting for the example at L = 15") {
  const StateSpaceModel m = example_model();
  const Index T = 1000, L = 15;
  const TrajectoryData t = simulate(m, generate_input(PrbsInput{1.0, 42}, T, 1), {}, Noise::off());
  const RankCondition rc = check_rank_condition(state_matrix(*t.x, L), hankel(t.u, L));
  CHECK(rc.required == 4 + 15);
  CHECK(rc.satisfied);
}

TEST_CASE("simulation is linear in the input") {
  std::mt19937_64 rng(37);
  const StateSpaceModel m = subfi::testing::random_model(rng, 4, 2, 3);
  const Matrix u1 = random_matrix(rng, 50, 2), u2 = random_matrix(rng, 50, 2);
  const Matrix y1 = simulate(m, u1, {}, Noise::off()).y;
  const Matrix y2 = simulate(m, u2, {}, Noise::off()).y;
  const Matrix y12 = simulate(m, u1 + u2, {}, Noise::off()).y;
  const Matrix y0 = simulate(m, Matrix::Zero(50, 2), {}, Noise::off()).y;
  CHECK((y12 - (y1 + y2 - y0)).norm() <= 1e-12 * y12.norm());
}

TEST_CASE("data equation holds window by window") {
  const StateSpaceModel m = example_model();
  const Index L = 5;
  const Matrix u = generate_input(MultiStepInput{{1, 2, 1.5}, 20}, 200, 1);
  Vector x0(4);
  x0 << 0.3, -0.2, 0.1, 0.4;
  const TrajectoryData t = simulate(m, u, scenario1(), Noise::off(), x0);
  const Matrix O = extended_observability(m, L);
  const Matrix Tu = toeplitz(m, InputAll{}, L);
  const Matrix Tf = toeplitz(m, FaultSet{{FaultChannel::actuator(1)}}, L);
  for (Index k = 0; k + L <= t.samples(); ++k) {
    const Vector yk = window(t.y, k, L);
    const Vector pred = O * t.x->row(k).transpose() + Tu * window(t.u, k, L) +
                        Tf * t.f_value.segment(k, L);
    CHECK((yk - pred).norm() <= 1e-10 * std::max(1.0, yk.norm()));
  }
}

TEST_CASE("sensor faults enter the output only") {
  const StateSpaceModel m = example_model();
  FaultScenario s;
  s.segments.push_back({2, 5, FaultChannel::sensor(3), StepSignal{2.0}});
  const Matrix u = generate_input(PrbsInput{1.0, 3}, 8, 1);
  const TrajectoryData healthy = simulate(m, u, {}, Noise::off());
  const TrajectoryData faulty = simulate(m, u, s, Noise::off());
  const Matrix diff = faulty.y - healthy.y;
  for (Index k = 0; k < 8; ++k) {
    const double expected = (k >= 2 && k < 5) ? 2.0 : 0.0;
    CHECK(diff(k, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(diff(k, 0)) < 1e-12);
    CHECK(std::abs(diff(k, 1)) < 1e-12);
  }
  CHECK(faulty.f_channel[2] == FaultChannel::sensor(3));
  CHECK_FALSE(faulty.f_channel[5].has_value());
}

TEST_CASE("scenario signals and validation") {
  CHECK(evaluate(ZeroSignal{}, 5, 0) == 0.0);
  CHECK(evaluate(ConstantSignal{-0.5}, 5, 0) == -0.5);
  CHECK(evaluate(SinusoidSignal{2.0, 0.25, 0.0}, 1, 0) == doctest::Approx(2.0));
  CHECK(evaluate(GeometricDecaySignal{0.95, 70}, 72, 70) == doctest::Approx(0.95 * 0.95));
  CHECK(evaluate(StepSignal{3.0}, 9, 0) == 3.0);
  CHECK(evaluate(SeriesSignal{{1, 2, 3}}, 11, 10) == 2.0);
  CHECK(evaluate(SeriesSignal{{1, 2, 3}}, 13, 10) == 0.0);

  const FaultScenario s = scenario1();
  CHECK_NOTHROW(s.validate(200));
  CHECK(s.active_segment(69) == std::optional<std::size_t>(0));
  CHECK(s.active_segment(70) == std::optional<std::size_t>(1));
  CHECK_FALSE(s.active_segment(9).has_value());
  CHECK(error_code([&] { s.validate(150); }) == ErrorCode::InvalidScenario);
  FaultScenario overlap = s;
  overlap.segments.push_back({60, 80, FaultChannel::sensor(1), StepSignal{1.0}});
  CHECK(error_code([&] { overlap.validate(200); }) == ErrorCode::InvalidScenario);
  FaultScenario empty_seg;
  empty_seg.segments.push_back({5, 5, FaultChannel::sensor(1), StepSignal{1.0}});
  CHECK(error_code([&] { empty_seg.validate(10); }) == ErrorCode::InvalidScenario);
  const StateSpaceModel m = example_model();
  FaultScenario bad_channel;
  bad_channel.segments.push_back({0, 2, FaultChannel::sensor(7), StepSignal{1.0}});
  CHECK(error_code([&] { simulate(m, Matrix::Zero(5, 1), bad_channel, Noise::off()); }) ==
        ErrorCode::InvalidChannel);
}

TEST_CASE("simultaneous faults through explicit fault matrices") {
  const StateSpaceModel m = example_model();
  const Matrix u = generate_input(PrbsInput{1.0, 9}, 30, 1);
  auto [B_f, D_f] = m.fault_matrices({FaultChannel::actuator(1)});
  Matrix f = Matrix::Zero(30, 1);
  f.block(10, 0, 10, 1).setConstant(0.5);
  FaultScenario s;
  s.segments.push_back({10, 20, FaultChannel::actuator(1), ConstantSignal{0.5}});
  const Matrix y1 = simulate_with_faults(m, u, B_f, D_f, f, Noise::off()).y;
  const Matrix y2 = simulate(m, u, s, Noise::off()).y;
  CHECK((y1 - y2).norm() < 1e-12);
  CHECK(error_code([&] { simulate_with_faults(m, u, B_f, D_f, Matrix::Zero(29, 1), Noise::off()); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("simulate_lti matches the model recursion") {
  const StateSpaceModel m = example_model();
  const Matrix u = generate_input(PrbsInput{1.0, 4}, 40, 1);
  CHECK((simulate_lti(m.input_system(), u) - simulate(m, u, {}, Noise::off()).y).norm() < 1e-12);
}

TEST_CASE("innovation sample covariance approaches Sigma_e") {
  const StateSpaceModel m = example_model();
  const Matrix e = gaussian_noise(m.Sigma_e(), 100000, 2024);
  const Matrix centered = e.rowwise() - e.colwise().mean();
  const Matrix cov = centered.transpose() * centered / double(e.rows() - 1);
  CHECK((cov - m.Sigma_e()).norm() <= 0.05 * m.Sigma_e().norm());
  CHECK(gaussian_noise(m.Sigma_e(), 10, 1) == gaussian_noise(m.Sigma_e(), 10, 1));
  CHECK(error_code([] { gaussian_noise(-Matrix::Identity(2, 2), 3, 1); }) == ErrorCode::InvalidModel);
}

TEST_CASE("noise on is deterministic per seed and off is exact") {
  const StateSpaceModel m = example_model();
  const Matrix u = generate_input(PrbsInput{1.0, 4}, 50, 1);
  const TrajectoryData a = simulate(m, u, {}, Noise::on(7));
  const TrajectoryData b = simulate(m, u, {}, Noise::on(7));
  CHECK(a.y == b.y);
  CHECK(a.y != simulate(m, u, {}, Noise::on(8)).y);
  CHECK(simulate(m, u, {}, Noise::off()).e->isZero(0.0));
}

// Acceptance checks: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "subfi/config.hpp"
#include "subfi/data.hpp"
#include "subfi/discern.hpp"
#include "subfi/error.hpp"
#include "subfi/experiment.hpp"
#include "subfi/presets.hpp"
#include "support/systems.hpp"

using namespace subfi;
using subfi::testing::Feedthrough;
using subfi::testing::max_abs;
using subfi::testing::random_matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 = none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const FaultChannel a1 = FaultChannel::actuator(1);

TrajectoryData example_data(Index T, std::uint64_t seed) {
  return simulate(example_model(), generate_input(PrbsInput{1.0, seed}, T, 1), {}, Noise::off());
}

double max_angle(const SubspaceBasis& a, const SubspaceBasis& b) {
  const std::vector<double> t = principal_angles(a, b);
  return t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
}

Outcome annihilation() {
  const TrajectoryData d = example_data(500, 2024);
  const KernelFilter f = estimate_kernel(d.u, d.y, 5, GapHeuristic{});
  const ResidualTrace r = residual(f, d.u, d.y);
  const double scale = vstack(hankel(d.u, 5).matrix, hankel(d.y, 5).matrix).colwise().norm().maxCoeff();
  const double worst = r.r.rowwise().norm().maxCoeff();
  const bool pass = f.r == 11 && worst <= 1e-8 * scale;
  return {pass, fmt("r=%zu, n=%zu, max|r_k|=%.3g, 1e-8*scale=%.3g over %ld windows", f.r,
                    f.estimated_n, worst, 1e-8 * scale, long(r.size()))};
}

Outcome subspace_recovery() {
  const StateSpaceModel m = example_model();
  const TrajectoryData d = example_data(500, 2024);
  const KernelFilter f = estimate_kernel(d.u, d.y, 5, FixedOrder{4});
  const Matrix Tu = toeplitz(m, InputAll{}, 5);
  const double l21 = max_angle(f.l21_basis, range_basis(Tu));
  const double l22 = max_angle(f.l22_basis, range_basis(extended_observability(m, 5)));
  const Matrix H = vstack(hankel(d.u, 5).matrix, hankel(d.y, 5).matrix);
  const Matrix L11 = lq_decompose(H).lower.topLeftCorner(5, 5);
  const double projected = max_abs(f.K_y * f.l21 - f.K_y * Tu * L11);
  const bool pass = l21 < 1e-8 && l22 < 1e-8;
  return {pass, fmt("max angle R(L21) vs R(T_u)=%.3g, R(L22) vs R(O)=%.3g, |K_y L21 - K_y T_u L11|=%.3g "
                    "(PRBS, N=500; the L21 clause is not met by finite generic data)",
                    l21, l22, projected)};
}

Outcome scenario1() {
  const ExperimentConfig cfg = load_config(SUBFI_SOURCE_DIR "/configs/scenario1.json");
  const RunResult r = run_scenario(cfg, cfg.monte_carlo.master_seed, false);
  const Index L = cfg.horizon;
  bool geometric_ok = true, sine_ok = true, constant_ok = true;
  double geo_min = 1.0, sine_other = 0.0, const_other = 0.0, own_dev = 0.0;
  for (std::size_t k = 0; k < r.truth.size(); ++k) {
    const WindowTruth& w = r.truth[k];
    if (!w.any_fault || !w.pure) continue;
    const Decision& d = r.decisions[k];
    const long start = long(k);
    const Index row = Index(k);
    if (start >= 70 && start + L <= 130) {
      const double c1 = r.angles.cos(row, 0), c2 = r.angles.cos(row, 2);
      geo_min = std::min({geo_min, c1, c2});
      if (d.status != DecisionStatus::Ambiguous || d.label() != "a1|s2" || c1 < 1 - 1e-8 || c2 < 1 - 1e-8) {
        geometric_ok = false;
      }
      continue;
    }
    const bool sine = start + L <= 70;
    double other = 0.0;
    for (Index j = 1; j < r.angles.cos.cols(); ++j) other = std::max(other, r.angles.cos(row, j));
    own_dev = std::max(own_dev, std::abs(1.0 - r.angles.cos(row, 0)));
    const bool ok = d.status == DecisionStatus::Fault && d.label() == "a1" &&
                    std::abs(1.0 - r.angles.cos(row, 0)) <= 1e-8 && other <= 1 - 1e-3;
    (sine ? sine_ok : constant_ok) &= ok;
    (sine ? sine_other : const_other) = std::max(sine ? sine_other : const_other, other);
  }
  return {geometric_ok && sine_ok && constant_ok,
          fmt("geometric window a1|s2 %s (min cos %.12f); sine window a1 %s (max other cos %.6f); "
              "constant window a1 %s (max other cos %.6f, bound %.3f); max |1-cos a1|=%.2g",
              geometric_ok ? "ok" : "FAILED", geo_min, sine_ok ? "ok" : "FAILED", sine_other,
              constant_ok ? "ok" : "FAILED", const_other, 1 - 1e-3, own_dev)};
}

Outcome discernibility() {
  const StateSpaceModel m = example_model();
  const TrajectoryData d = example_data(600, 7);
  const KernelFilter f = estimate_kernel(d.u, d.y, 5, FixedOrder{4});
  const DiscernibilityReport rep =
      intersection_report(build_dictionaries(f, build_signatures(f)), &m, ReportOptions{kDefaultRelTol, false});
  bool pass = rep.pairs.size() == 6;
  std::ostringstream table;
  for (const IntersectionRecord& p : rep.pairs) {
    const bool agree = p.nullity_form && *p.nullity_form == p.d_cap;
    pass &= agree;
    table << p.first.label() << "-" << p.second.label() << "=" << p.d_cap << (agree ? "" : "(!)") << " ";
  }
  pass &= rep.pair(a1, FaultChannel::sensor(2)).d_cap == 1;
  for (int i = 1; i <= 3; ++i)
    for (int j = i + 1; j <= 3; ++j)
      pass &= rep.pair(FaultChannel::sensor(i), FaultChannel::sensor(j)).d_cap == 0;

  std::mt19937_64 rng(2);
  const StateSpaceModel two = subfi::testing::random_model(rng, 3, 1, 2);
  const TrajectoryData d2 = simulate(two, generate_input(PrbsInput{1.0, 8}, 600, 1), {}, Noise::off());
  const KernelFilter f2 = estimate_kernel(d2.u, d2.y, 5, FixedOrder{3});
  const DiscernibilityReport rep2 = intersection_report(build_dictionaries(f2, build_signatures(f2)), &two,
                                                        ReportOptions{kDefaultRelTol, false});
  const std::size_t sensor_pair = rep2.pair(FaultChannel::sensor(1), FaultChannel::sensor(2)).d_cap;
  pass &= sensor_pair == 3;
  return {pass, fmt("%s| n_y=2, n=3 sensor pair=%zu", table.str().c_str(), sensor_pair)};
}

Outcome zero_counting() {
  std::mt19937_64 rng(5);
  int agree = 0, skipped = 0, mismatch = 0;
  for (int i = 0; i < 200; ++i) {
    const Index n = 1 + i % 5;
    const Index nf = 1 + (i / 5) % 2;
    const Index ny = nf + (i / 10) % 2;
    Feedthrough ft = i % 3 == 0 ? Feedthrough::Zero : (i % 3 == 1 ? Feedthrough::Full : Feedthrough::RankOne);
    // A strictly proper system has transfer rank at most n.
    if (ft == Feedthrough::Zero && n < nf) ft = Feedthrough::RankOne;
    const LtiSystem s = subfi::testing::random_system(rng, n, nf, ny, ft);
    try {
      const PencilZeros p = pencil_zero_oracle(s);
      const auto tau = minimal_delay(s, n + 1);
      const Index L = std::max<Index>(Index(*tau), n);
      const ZeroCount z = count_zeros_nullity(s, L);
      if (z.total == p.count.total) {
        ++agree;
      } else {
        ++mismatch;
      }
    } catch (const Error& e) {
      ++skipped;
      std::cerr << "criterion 5: system " << i << " skipped: " << e.what() << "\n";
    }
  }
  const bool pass = mismatch == 0 && skipped < 10;
  return {pass, fmt("%d agree, %d mismatch, %d skipped of 200", agree, mismatch, skipped)};
}

Outcome zero_location() {
  const StateSpaceModel m = example_model();
  const PencilZeros z = pencil_zero_oracle(m.fault_subsystem({a1}, std::vector<int>{1, 3}));
  const bool one = z.finite_zeros.size() == 1;
  const double err = one ? std::abs(z.finite_zeros[0] - std::complex<double>(0.95, 0.0)) : 1.0;
  return {one && err < 1e-6, fmt("%zu finite zero(s), |z - 0.95|=%.3g", z.finite_zeros.size(), err)};
}

Outcome monte_carlo_scenario2() {
  const ExperimentConfig cfg = load_config(SUBFI_SOURCE_DIR "/configs/scenario2.json");
  const MonteCarloSummary mc = monte_carlo(cfg);
  const double mean = mc.fault_active.mean;
  const double sd = mc.fault_active.stddev;
  const bool pass = mc.succeeded >= 50 && mc.succeeded == mc.trials.size() && mean >= 0.85 &&
                    mean <= 0.97 && sd < 0.05 && cfg.horizon == 15 && cfg.healthy.samples == 1000;
  return {pass, fmt("%zu/%zu trials, mean fault-active accuracy %.4f (band [0.85, 0.97]), stddev %.4f "
                    "(< 0.05), excluding transients %.4f",
                    mc.succeeded, mc.trials.size(), mean, sd, mc.excluding_transients.mean)};
}

struct PropertyTally {
  int lemma2_vectors = 0, lemma2_converse = 0, roundtrips = 0, failures = 0, redrawn = 0;
};

void check_system(const StateSpaceModel& m, std::mt19937_64& rng, PropertyTally& t) {
  const auto channels = m.channels();
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      const LtiSystem aug = augment_pair(m, channels[i], channels[j]);
      const auto tau = minimal_delay(aug, m.n() + 2);
      if (!tau) continue;
      const Index L = std::max<Index>(Index(*tau), m.n()) + 1;
      const Matrix O = observability(aug.A, aug.C, L);
      const Matrix T = block_toeplitz(aug, L);
      const Matrix Ky = left_nullspace(O).basis().transpose();
      const ZeroDynamics zd = zero_dynamic_inputs(aug, L);

      for (Index c = 0; c < zd.f0.cols(); ++c) {
        ++t.lemma2_vectors;
        if ((Ky * T * zd.f0.col(c)).norm() > 1e-8) ++t.failures;
      }
      const SubspaceBasis invisible = right_nullspace(Ky * T);
      if (invisible.dim() != std::size_t(zd.f0.cols())) ++t.failures;
      for (int s = 0; s < 3 && invisible.dim() > 0; ++s) {
        Vector f0 = invisible.basis() * random_matrix(rng, Index(invisible.dim()), 1);
        f0.normalize();
        const Vector x0 = O.colPivHouseholderQr().solve(-T * f0);
        ++t.lemma2_converse;
        if ((O * x0 + T * f0).norm() > 1e-8) ++t.failures;
      }

      const LtiSystem s1 = m.fault_subsystem({channels[i]});
      const LtiSystem s2 = m.fault_subsystem({channels[j]});
      for (Index c = 0; c < zd.f0.cols(); ++c) {
        Matrix f1(L, 1), f2(L, 1);
        for (Index k = 0; k < L; ++k) {
          f1(k, 0) = zd.f0(2 * k, c);
          f2(k, 0) = -zd.f0(2 * k + 1, c);
        }
        const Matrix y1 = simulate_lti(s1, f1, zd.x0.col(c));
        const Matrix y2 = simulate_lti(s2, f2, Vector::Zero(m.n()));
        ++t.roundtrips;
        if (max_abs(y1 - y2) > 1e-8) ++t.failures;
      }
    }
  }
}

Outcome zero_dynamics_properties() {
  PropertyTally t;
  std::mt19937_64 rng(8);
  check_system(example_model(), rng, t);
  int checked = 0;
  while (checked < 50) {
    const int i = checked;
    const StateSpaceModel m = subfi::testing::random_model(rng, 2 + i % 3, 1 + i % 2, 2 + (i / 2) % 2);
    PropertyTally trial;
    try {
      check_system(m, rng, trial);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankToleranceAmbiguous && e.code() != ErrorCode::NumericallyIllConditioned) throw;
      ++t.redrawn;
      std::cerr << "criterion 8: redrawing system " << i << ": " << e.what() << "\n";
      continue;
    }
    t.lemma2_vectors += trial.lemma2_vectors;
    t.lemma2_converse += trial.lemma2_converse;
    t.roundtrips += trial.roundtrips;
    t.failures += trial.failures;
    ++checked;
  }
  const bool pass = t.failures == 0 && t.roundtrips > 0;
  return {pass, fmt("example + 50 random systems: %d zero-dynamic vectors, %d converse samples, "
                    "%d output roundtrips, %d failures, %d ill-conditioned draws replaced",
                    t.lemma2_vectors, t.lemma2_converse, t.roundtrips, t.failures, t.redrawn)};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const ExperimentConfig cfg = load_config(SUBFI_SOURCE_DIR "/configs/scenario2.json");
  const auto base = std::filesystem::temp_directory_path() / "subfi_acceptance_determinism";
  std::filesystem::remove_all(base);
  for (const char* run : {"a", "b"}) {
    const RunResult r = run_scenario(cfg, cfg.monte_carlo.master_seed);
    write_run(r, cfg, base / run);
  }
  const std::string a = read_file(base / "a" / "decisions.csv");
  const std::string b = read_file(base / "b" / "decisions.csv");
  const bool pass = !a.empty() && a == b;
  return {pass, fmt("decisions.csv %zu bytes vs %zu bytes, %s", a.size(), b.size(),
                    a == b ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "kernel annihilation", 1.0, annihilation},
      {2, "subspace recovery", 1.0, subspace_recovery},
      {3, "scenario 1 classification", 1.0, scenario1},
      {4, "discernibility table", 5.0, discernibility},
      {5, "zero counting vs pencil oracle", 60.0, zero_counting},
      {6, "zero location", 0.0, zero_location},
      {7, "scenario 2 Monte Carlo accuracy", 300.0, monte_carlo_scenario2},
      {8, "zero-dynamic input properties", 60.0, zero_dynamics_properties},
      {9, "determinism", 0.0, determinism},
  };

  bool ok = true;
  for (const Criterion& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.details += fmt("; over time limit %.0f s", c.time_limit_s);
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.details
              << " [" << fmt("%.2f", secs) << " s]" << std::endl;
    ok &= o.pass;
  }
  return ok ? 0 : 1;
}

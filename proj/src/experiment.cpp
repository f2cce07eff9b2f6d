#include "subfi/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "subfi/data.hpp"
#include "subfi/error.hpp"
#include "subfi/io.hpp"

namespace subfi {

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.message());
  }
}

std::uint64_t substream(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Matrix make_input(const RunSegment& run, Index n_u, std::uint64_t stream_seed) {
  InputKind kind = run.input;
  if (auto* prbs = std::get_if<PrbsInput>(&kind); prbs && run.seed_from_trial) {
    prbs->seed = stream_seed;
  }
  return generate_input(kind, run.samples, n_u);
}

double mean_square(const Matrix& m) { return m.size() > 0 ? m.squaredNorm() / m.size() : 0.0; }

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

bool contains(const std::vector<FaultChannel>& v, const FaultChannel& c) {
  return std::find(v.begin(), v.end(), c) != v.end();
}

Json accuracy_json(const Accuracy& a) {
  return {{"fault_active", a.fault_active},
          {"excluding_transients", a.excluding_transients},
          {"all_instants", a.all_instants},
          {"fault_active_windows", a.fault_active_count},
          {"pure_fault_windows", a.pure_fault_count},
          {"windows", a.window_count},
          {"fault_windows", a.fault_windows},
          {"detected_fault_windows", a.detected_fault_windows}};
}

Json confusion_json(const Confusion& c) {
  Json j = Json::object();
  for (const auto& [truth, row] : c) {
    Json r = Json::object();
    for (const auto& [label, n] : row) r[label] = n;
    j[truth] = std::move(r);
  }
  return j;
}

std::string policy_name(const RankPolicy& p) {
  if (std::holds_alternative<FixedOrder>(p)) return "fixed_order";
  if (std::holds_alternative<GapHeuristic>(p)) return "gap";
  return "threshold";
}

}  // namespace

double output_noise_power(const StateSpaceModel& model) {
  const Index n = model.n();
  const Matrix& A = model.A();
  Eigen::EigenSolver<Matrix> eig(A, false);
  if (n > 0 && eig.eigenvalues().cwiseAbs().maxCoeff() >= 1.0) {
    throw Error(ErrorCode::InvalidModel, "A is not Schur stable; stationary noise power undefined");
  }
  const Matrix Q = model.K() * model.Sigma_e() * model.K().transpose();
  // vec(P) = (I − A⊗A)⁻¹ vec(Q)
  Matrix M = Matrix::Identity(n * n, n * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      M.block(i * n, j * n, n, n) -= A(i, j) * A;
    }
  }
  const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector p = n > 0 ? Vector(M.partialPivLu().solve(q)) : Vector();
  const Matrix P = Eigen::Map<const Matrix>(p.data(), n, n);
  const Matrix cov = model.C() * P * model.C().transpose() + model.Sigma_e();
  return cov.trace() / static_cast<double>(model.n_y());
}

double snr_to_noise_scale(const StateSpaceModel& model, const Matrix& input, double target_snr_db) {
  if (std::isinf(target_snr_db) && target_snr_db > 0) return 0.0;
  if (!std::isfinite(target_snr_db)) {
    throw Error(ErrorCode::OutOfRange, "target SNR must be finite or +infinity");
  }
  const TrajectoryData clean = simulate(model, input, {}, Noise::off());
  const double ps = mean_square(clean.y);
  if (ps == 0.0) throw Error(ErrorCode::ZeroSignalPower, "noise-free output has zero power");
  const double pn = output_noise_power(model);
  if (pn <= 0.0) throw Error(ErrorCode::InvalidModel, "model has no innovation covariance to scale");
  return ps / (std::pow(10.0, target_snr_db / 10.0) * pn);
}

std::string WindowTruth::label() const {
  if (!pure) return "transient";
  if (!any_fault) return "healthy";
  return channels.front().label();
}

std::vector<WindowTruth> window_truth(const FaultScenario& scenario, Index samples, Index L) {
  std::vector<WindowTruth> out;
  if (samples < L) return out;
  for (Index k = 0; k + L <= samples; ++k) {
    WindowTruth w;
    std::optional<std::optional<std::size_t>> first;
    for (Index t = k; t < k + L; ++t) {
      const auto seg = scenario.active_segment(static_cast<long>(t));
      if (!first) {
        first = seg;
      } else if (*first != seg) {
        w.pure = false;
      }
      if (seg) {
        w.any_fault = true;
        const FaultChannel& c = scenario.segments[*seg].channel;
        if (!contains(w.channels, c)) w.channels.push_back(c);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

Accuracy score(const std::vector<Decision>& decisions, const std::vector<WindowTruth>& truth) {
  if (decisions.size() != truth.size()) {
    throw Error(ErrorCode::DimensionMismatch, "decisions and ground truth differ in length");
  }
  Accuracy a;
  std::size_t ok_active = 0, ok_pure = 0, ok_all = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Decision& d = decisions[i];
    const WindowTruth& w = truth[i];
    ++a.window_count;
    if (!w.any_fault) {
      if (d.status == DecisionStatus::Healthy) ++ok_all;
      continue;
    }
    ++a.fault_windows;
    const bool correct = d.status == DecisionStatus::Fault && contains(w.channels, d.channels.front());
    if (correct) ++ok_all;
    if (d.status == DecisionStatus::Healthy) continue;
    ++a.detected_fault_windows;
    ++a.fault_active_count;
    if (correct) ++ok_active;
    if (w.pure) {
      ++a.pure_fault_count;
      if (correct) ++ok_pure;
    }
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  a.fault_active = ratio(ok_active, a.fault_active_count);
  a.excluding_transients = ratio(ok_pure, a.pure_fault_count);
  a.all_instants = ratio(ok_all, a.window_count);
  return a;
}

Confusion confusion(const std::vector<Decision>& decisions, const std::vector<WindowTruth>& truth) {
  Confusion c;
  const std::size_t n = std::min(decisions.size(), truth.size());
  for (std::size_t i = 0; i < n; ++i) ++c[truth[i].label()][decisions[i].label()];
  return c;
}

TrialSeeds derive_seeds(std::uint64_t s) {
  return {substream(s, 1), substream(s, 2), substream(s, 3),
          substream(s, 4), substream(s, 5), substream(s, 6)};
}

RunResult run_scenario(const ExperimentConfig& cfg, std::uint64_t trial_seed, bool with_report) {
  const StateSpaceModel& base = cfg.model;
  const TrialSeeds seeds = derive_seeds(trial_seed);
  const Index L = cfg.horizon;
  RunResult res;
  res.seed = trial_seed;

  const Matrix u_h = stage("input", [&] { return make_input(cfg.healthy, base.n_u(), seeds.healthy_input); });
  const Matrix u_v =
      stage("input", [&] { return make_input(cfg.healthy, base.n_u(), seeds.validation_input); });
  const Matrix u_f = stage("input", [&] { return make_input(cfg.faulty, base.n_u(), seeds.faulty_input); });

  bool noisy = true;
  const StateSpaceModel model = stage("noise", [&]() -> StateSpaceModel {
    return std::visit(
        [&](const auto& n) -> StateSpaceModel {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, NoiseOff>) {
            noisy = false;
            res.noise_scale = 0.0;
            return base;
          } else if constexpr (std::is_same_v<T, NoiseModel>) {
            res.noise_scale = 1.0;
            return base;
          } else if constexpr (std::is_same_v<T, NoiseSnr>) {
            res.noise_scale = snr_to_noise_scale(base, u_h, n.db);
            noisy = res.noise_scale > 0.0;
            return base.with_noise_scale(res.noise_scale);
          } else {
            res.noise_scale = 1.0;
            return StateSpaceModel(base.A(), base.B_u(), base.C(), base.D_u(), base.K(), n.sigma);
          }
        },
        cfg.noise);
  });
  auto noise = [&](std::uint64_t s) { return noisy ? Noise::on(s) : Noise::off(); };

  res.healthy = stage("simulate", [&] {
    return simulate(model, u_h, {}, noise(seeds.healthy_noise), cfg.healthy.x0);
  });
  if (noisy) {
    const TrajectoryData clean = simulate(model, u_h, {}, Noise::off(), cfg.healthy.x0);
    const double pn = mean_square(res.healthy.y - clean.y);
    if (pn > 0.0) res.measured_snr_db = 10.0 * std::log10(mean_square(clean.y) / pn);
  }
  const TrajectoryData validation = stage("simulate", [&] {
    return simulate(model, u_v, {}, noise(seeds.validation_noise), cfg.healthy.x0);
  });

  res.filter = stage("kernel", [&] {
    return cfg.dictionaries == DictionarySource::Nominal
               ? nominal_kernel(base, L)
               : estimate_kernel(res.healthy.u, res.healthy.y, L, cfg.rank_policy, cfg.pe_rel_tol);
  });
  res.dictionaries = stage("dictionary", [&] {
    const auto sigs = cfg.dictionaries == DictionarySource::Nominal
                          ? build_oracle_signatures(res.filter, base)
                          : build_signatures(res.filter);
    return build_dictionaries(res.filter, sigs, cfg.discern.rel_tol);
  });

  res.residual_threshold = stage("threshold", [&] {
    if (cfg.thresholds.residual) return *cfg.thresholds.residual;
    const ResidualTrace rv = residual(res.filter, validation.u, validation.y);
    std::vector<double> norms(static_cast<std::size_t>(rv.size()));
    for (Index t = 0; t < rv.size(); ++t) norms[static_cast<std::size_t>(t)] = rv.r.row(t).norm();
    const HankelStack U = hankel(validation.u, L);
    const HankelStack Y = hankel(validation.y, L);
    const double scale = vstack(U.matrix, Y.matrix).colwise().norm().maxCoeff();
    return std::max(cfg.thresholds.auto_factor * percentile(norms, cfg.thresholds.auto_percentile),
                    1e-9 * scale);
  });

  res.faulty = stage("simulate", [&] {
    return simulate(model, u_f, cfg.scenario, noise(seeds.faulty_noise), cfg.faulty.x0);
  });
  stage("classify", [&] {
    res.residual = residual(res.filter, res.faulty.u, res.faulty.y);
    res.angles = angles(res.residual, res.dictionaries);
    res.decisions = decide(res.angles, res.residual_threshold, cfg.thresholds.tie);
    return 0;
  });

  if (with_report && cfg.discern.enabled) {
    res.report = stage("discern", [&] {
      return intersection_report(res.dictionaries, &base,
                                 ReportOptions{cfg.discern.rel_tol, cfg.discern.strict});
    });
  }

  res.truth = window_truth(cfg.scenario, res.faulty.samples(), L);
  res.accuracy = score(res.decisions, res.truth);
  res.confusion = confusion(res.decisions, res.truth);
  return res;
}

Json metric_definitions() {
  return {
      {"window", "decision at k uses samples k..k+L-1 (window start indexing)"},
      {"fault_active",
       "correct / windows that contain a faulty sample and whose residual norm exceeds the "
       "threshold; a decision is correct when it names exactly one channel that is active in the "
       "window"},
      {"excluding_transients",
       "as fault_active, restricted to windows lying entirely inside one fault segment"},
      {"all_instants",
       "correct / all windows; healthy windows must be declared healthy, undetected faults count "
       "as errors"},
      {"snr",
       "10*log10(mean squared noise-free output / mean stationary output-noise power per channel), "
       "noise power = trace(C P C^T + Sigma_e)/n_y with P = A P A^T + K Sigma_e K^T"},
      {"residual_threshold",
       "auto: max(auto_factor * percentile of healthy validation residual norms, "
       "1e-9 * largest validation window norm)"}};
}

Json run_summary(const RunResult& r, const ExperimentConfig& cfg) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = cfg.name;
  j["seed"] = r.seed;
  j["horizon"] = cfg.horizon;
  j["dictionaries"] = cfg.dictionaries == DictionarySource::Data ? "data" : "nominal";
  j["rank_policy"] = policy_name(cfg.rank_policy);
  j["estimated_n"] = r.filter.estimated_n;
  j["residual_dim"] = r.filter.r;
  j["noise_scale"] = r.noise_scale;
  j["measured_snr_db"] = r.measured_snr_db ? Json(*r.measured_snr_db) : Json(nullptr);
  j["residual_threshold"] = r.residual_threshold;
  j["accuracy"] = accuracy_json(r.accuracy);
  j["confusion"] = confusion_json(r.confusion);
  j["definitions"] = metric_definitions();
  return j;
}

void write_run(const RunResult& r, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json(filter_to_json(r.filter), dir / "filter.json");
  write_json(dictionaries_to_json(r.dictionaries), dir / "dictionaries.json");
  write_residuals_csv(r.residual, dir / "residuals.csv");
  write_angles_csv(r.angles, dir / "angles.csv");
  write_decisions_csv(r.decisions, dir / "decisions.csv");
  if (r.report) write_json(report_to_json(*r.report), dir / "discernibility.json");
  write_json(run_summary(r, cfg), dir / "summary.json");
  write_trajectory_csv(r.healthy, dir / "healthy.csv");
  write_trajectory_csv(r.faulty, dir / "faulty.csv");
}

MonteCarloSummary monte_carlo(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.monte_carlo.trials;
  MonteCarloSummary s;
  s.master_seed = cfg.monte_carlo.master_seed;
  s.seeds.resize(n);
  s.trials.resize(n);
  std::vector<Confusion> conf(n);
  std::vector<std::string> errors(n);
  for (std::size_t i = 0; i < n; ++i) s.seeds[i] = s.master_seed + i;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        RunResult r = run_scenario(cfg, s.seeds[i], false);
        s.trials[i] = r.accuracy;
        conf[i] = std::move(r.confusion);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  unsigned threads = cfg.monte_carlo.threads;
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> fa, ex, all;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.trials[i]) {
      s.failures.push_back("trial " + std::to_string(i) + " (seed " + std::to_string(s.seeds[i]) +
                           "): " + errors[i]);
      continue;
    }
    ++s.succeeded;
    fa.push_back(s.trials[i]->fault_active);
    ex.push_back(s.trials[i]->excluding_transients);
    all.push_back(s.trials[i]->all_instants);
    for (const auto& [truth, row] : conf[i]) {
      for (const auto& [label, count] : row) s.confusion[truth][label] += count;
    }
  }
  s.fault_active = stats(fa);
  s.excluding_transients = stats(ex);
  s.all_instants = stats(all);
  return s;
}

Json monte_carlo_to_json(const MonteCarloSummary& s, const ExperimentConfig& cfg) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = cfg.name;
  j["master_seed"] = s.master_seed;
  j["trials"] = s.trials.size();
  j["succeeded"] = s.succeeded;
  auto st = [](const Stats& x) { return Json{{"mean", x.mean}, {"stddev", x.stddev}}; };
  j["accuracy"] = {{"fault_active", st(s.fault_active)},
                   {"excluding_transients", st(s.excluding_transients)},
                   {"all_instants", st(s.all_instants)}};
  Json per = Json::array();
  for (std::size_t i = 0; i < s.trials.size(); ++i) {
    Json t{{"index", i}, {"seed", s.seeds[i]}};
    t["accuracy"] = s.trials[i] ? accuracy_json(*s.trials[i]) : Json(nullptr);
    per.push_back(std::move(t));
  }
  j["per_trial"] = std::move(per);
  j["failures"] = s.failures;
  j["confusion"] = confusion_json(s.confusion);
  j["definitions"] = metric_definitions();
  return j;
}

}  // namespace subfi

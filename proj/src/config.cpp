#include "subfi/config.hpp"

#include <set>

#include "subfi/error.hpp"

namespace subfi {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, "config." + field + ": " + msg);
}

template <typename T>
T get(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(path + key, "wrong type");
  }
}

template <typename T>
T get_or(const Json& j, const std::string& key, const std::string& path, T fallback) {
  return j.contains(key) ? get<T>(j, key, path) : fallback;
}

Matrix get_matrix(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + key, "missing");
  try {
    return matrix_from_json(j.at(key));
  } catch (const std::exception& e) {
    fail(path + key, e.what());
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "root" : path.substr(0, path.size() - 1), "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail(path + key, "unknown field");
  }
}

StateSpaceModel parse_model(const Json& j, std::string& name) {
  const std::string p = "model.";
  if (j.contains("preset")) {
    reject_unknown(j, {"preset"}, p);
    name = get<std::string>(j, "preset", p);
    try {
      return model_preset(name);
    } catch (const Error& e) {
      fail(p + "preset", e.what());
    }
  }
  reject_unknown(j, {"A", "B_u", "C", "D_u", "K", "Sigma_e"}, p);
  name = "inline";
  try {
    return StateSpaceModel(get_matrix(j, "A", p), get_matrix(j, "B_u", p), get_matrix(j, "C", p),
                           get_matrix(j, "D_u", p),
                           j.contains("K") ? get_matrix(j, "K", p) : Matrix(),
                           j.contains("Sigma_e") ? get_matrix(j, "Sigma_e", p) : Matrix());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    fail("model", e.what());
  }
}

InputKind parse_input(const Json& j, const std::string& p, bool& seed_from_trial) {
  const std::string kind = get<std::string>(j, "kind", p);
  seed_from_trial = true;
  if (kind == "prbs") {
    reject_unknown(j, {"kind", "level", "register_bits", "hold", "seed"}, p);
    PrbsInput in;
    in.level = get_or(j, "level", p, 1.0);
    in.register_bits = get_or(j, "register_bits", p, 10);
    in.hold = get_or(j, "hold", p, 1);
    if (j.contains("seed")) {
      in.seed = get<std::uint64_t>(j, "seed", p);
      seed_from_trial = false;
    }
    if (in.register_bits < 2 || in.register_bits > 32) fail(p + "register_bits", "must be in [2, 32]");
    if (in.hold < 1) fail(p + "hold", "must be >= 1");
    return in;
  }
  if (kind == "multistep") {
    reject_unknown(j, {"kind", "values", "dwell"}, p);
    MultiStepInput in;
    in.values = get<std::vector<double>>(j, "values", p);
    in.dwell = get_or(j, "dwell", p, 1);
    if (in.values.empty()) fail(p + "values", "must not be empty");
    if (in.dwell < 1) fail(p + "dwell", "must be >= 1");
    return in;
  }
  if (kind == "impulse") {
    reject_unknown(j, {"kind"}, p);
    return ImpulseInput{};
  }
  if (kind == "zero") {
    reject_unknown(j, {"kind"}, p);
    return ZeroInput{};
  }
  fail(p + "kind", "unknown input kind '" + kind + "'");
}

FaultSignal parse_signal(const Json& j, const std::string& p) {
  const std::string kind = get<std::string>(j, "kind", p);
  if (kind == "zero") {
    reject_unknown(j, {"kind"}, p);
    return ZeroSignal{};
  }
  if (kind == "constant") {
    reject_unknown(j, {"kind", "value"}, p);
    return ConstantSignal{get<double>(j, "value", p)};
  }
  if (kind == "sinusoid") {
    reject_unknown(j, {"kind", "amplitude", "frequency", "phase"}, p);
    return SinusoidSignal{get_or(j, "amplitude", p, 1.0), get<double>(j, "frequency", p),
                          get_or(j, "phase", p, 0.0)};
  }
  if (kind == "geometric") {
    reject_unknown(j, {"kind", "base", "offset"}, p);
    return GeometricDecaySignal{get<double>(j, "base", p), get_or(j, "offset", p, 0L)};
  }
  if (kind == "step") {
    reject_unknown(j, {"kind", "level"}, p);
    return StepSignal{get<double>(j, "level", p)};
  }
  if (kind == "series") {
    reject_unknown(j, {"kind", "values"}, p);
    return SeriesSignal{get<std::vector<double>>(j, "values", p)};
  }
  fail(p + "kind", "unknown signal kind '" + kind + "'");
}

RunSegment parse_run(const Json& j, const std::string& p, Index n) {
  RunSegment r;
  r.samples = get<Index>(j, "samples", p);
  if (r.samples < 1) fail(p + "samples", "must be >= 1");
  if (!j.contains("input")) fail(p + "input", "missing");
  r.input = parse_input(j.at("input"), p + "input.", r.seed_from_trial);
  if (j.contains("x0")) {
    r.x0 = vector_from_json(j.at("x0"));
    if (r.x0.size() != n) fail(p + "x0", "length must equal the state dimension");
  }
  return r;
}

NoiseSpec parse_noise(const Json& j, Index n_y) {
  const std::string p = "noise.";
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "off") return NoiseOff{};
    if (s == "model") return NoiseModel{};
    fail("noise", "expected \"off\", \"model\" or an object");
  }
  reject_unknown(j, {"snr_db", "covariance"}, p);
  if (j.contains("snr_db") && j.contains("covariance")) {
    fail("noise", "snr_db and covariance are mutually exclusive");
  }
  if (j.contains("snr_db")) {
    const double db = get<double>(j, "snr_db", p);
    return NoiseSnr{db};
  }
  if (j.contains("covariance")) {
    Matrix s = get_matrix(j, "covariance", p);
    if (s.rows() != n_y || s.cols() != n_y) fail(p + "covariance", "must be n_y x n_y");
    return NoiseCovariance{std::move(s)};
  }
  fail("noise", "object needs snr_db or covariance");
}

RankPolicy parse_policy(const Json& j) {
  const std::string p = "rank_policy.";
  const std::string kind = get<std::string>(j, "kind", p);
  if (kind == "fixed_order") {
    reject_unknown(j, {"kind", "order"}, p);
    return FixedOrder{get<std::size_t>(j, "order", p)};
  }
  if (kind == "gap") {
    reject_unknown(j, {"kind", "factor"}, p);
    const double f = get_or(j, "factor", p, 10.0);
    if (!(f > 1.0)) fail(p + "factor", "must exceed 1");
    return GapHeuristic{f};
  }
  if (kind == "threshold") {
    reject_unknown(j, {"kind", "rel_tol"}, p);
    const double t = get_or(j, "rel_tol", p, kDefaultRelTol);
    if (!(t > 0.0)) fail(p + "rel_tol", "must be positive");
    return Threshold{t};
  }
  fail(p + "kind", "unknown rank policy '" + kind + "'");
}

Json input_to_json(const InputKind& in, bool seed_from_trial) {
  return std::visit(
      [&](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PrbsInput>) {
          Json j{{"kind", "prbs"}, {"level", s.level}, {"register_bits", s.register_bits},
                 {"hold", s.hold}};
          if (!seed_from_trial) j["seed"] = s.seed;
          return j;
        } else if constexpr (std::is_same_v<T, MultiStepInput>) {
          return {{"kind", "multistep"}, {"values", s.values}, {"dwell", s.dwell}};
        } else if constexpr (std::is_same_v<T, ImpulseInput>) {
          return {{"kind", "impulse"}};
        } else {
          return {{"kind", "zero"}};
        }
      },
      in);
}

Json signal_to_json(const FaultSignal& sig) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ZeroSignal>) {
          return {{"kind", "zero"}};
        } else if constexpr (std::is_same_v<T, ConstantSignal>) {
          return {{"kind", "constant"}, {"value", s.value}};
        } else if constexpr (std::is_same_v<T, SinusoidSignal>) {
          return {{"kind", "sinusoid"}, {"amplitude", s.amplitude}, {"frequency", s.frequency},
                  {"phase", s.phase}};
        } else if constexpr (std::is_same_v<T, GeometricDecaySignal>) {
          return {{"kind", "geometric"}, {"base", s.base}, {"offset", s.offset}};
        } else if constexpr (std::is_same_v<T, StepSignal>) {
          return {{"kind", "step"}, {"level", s.level}};
        } else {
          return {{"kind", "series"}, {"values", s.values}};
        }
      },
      sig);
}

Json run_to_json(const RunSegment& r) {
  Json j{{"samples", r.samples}, {"input", input_to_json(r.input, r.seed_from_trial)}};
  if (r.x0.size() > 0) j["x0"] = vector_to_json(r.x0);
  return j;
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  reject_unknown(j, {"schema_version", "name", "model", "horizon", "rank_policy", "pe_rel_tol",
                     "healthy", "faulty", "scenario", "noise", "dictionaries", "thresholds",
                     "discern", "monte_carlo", "output_dir"},
                 "");
  if (get<int>(j, "schema_version", "") != kSchemaVersion) {
    fail("schema_version", "unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", "", "experiment");
  if (!j.contains("model")) fail("model", "missing");
  c.model = parse_model(j.at("model"), c.model_name);

  c.horizon = get<Index>(j, "horizon", "");
  if (c.horizon < 2) fail("horizon", "must be >= 2");
  if (j.contains("rank_policy")) c.rank_policy = parse_policy(j.at("rank_policy"));
  c.pe_rel_tol = get_or(j, "pe_rel_tol", "", kDefaultRelTol);

  if (!j.contains("healthy")) fail("healthy", "missing");
  reject_unknown(j.at("healthy"), {"samples", "input", "x0"}, "healthy.");
  c.healthy = parse_run(j.at("healthy"), "healthy.", c.model.n());
  if (!j.contains("faulty")) fail("faulty", "missing");
  reject_unknown(j.at("faulty"), {"samples", "input", "x0"}, "faulty.");
  c.faulty = parse_run(j.at("faulty"), "faulty.", c.model.n());

  if (j.contains("scenario")) {
    const Json& s = j.at("scenario");
    if (!s.is_array()) fail("scenario", "expected an array of segments");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string p = "scenario[" + std::to_string(i) + "].";
      reject_unknown(s[i], {"start", "end", "channel", "signal"}, p);
      FaultSegment seg;
      seg.start = get<long>(s[i], "start", p);
      seg.end = get<long>(s[i], "end", p);
      try {
        seg.channel = FaultChannel::parse(get<std::string>(s[i], "channel", p));
        c.model.check_channel(seg.channel);
      } catch (const Error& e) {
        fail(p + "channel", e.what());
      }
      if (!s[i].contains("signal")) fail(p + "signal", "missing");
      seg.signal = parse_signal(s[i].at("signal"), p + "signal.");
      c.scenario.segments.push_back(std::move(seg));
    }
    try {
      c.scenario.validate(c.faulty.samples);
    } catch (const Error& e) {
      fail("scenario", e.what());
    }
  }

  if (j.contains("noise")) c.noise = parse_noise(j.at("noise"), c.model.n_y());

  const std::string dict = get_or<std::string>(j, "dictionaries", "", "data");
  if (dict == "data") {
    c.dictionaries = DictionarySource::Data;
  } else if (dict == "nominal") {
    c.dictionaries = DictionarySource::Nominal;
  } else {
    fail("dictionaries", "expected \"data\" or \"nominal\"");
  }

  if (j.contains("thresholds")) {
    const Json& t = j.at("thresholds");
    const std::string p = "thresholds.";
    reject_unknown(t, {"residual", "auto_factor", "auto_percentile", "tie", "angle"}, p);
    if (t.contains("residual") && !(t.at("residual").is_string() && t.at("residual") == "auto")) {
      c.thresholds.residual = get<double>(t, "residual", p);
      if (*c.thresholds.residual < 0.0) fail(p + "residual", "must be >= 0");
    }
    c.thresholds.auto_factor = get_or(t, "auto_factor", p, c.thresholds.auto_factor);
    c.thresholds.auto_percentile = get_or(t, "auto_percentile", p, c.thresholds.auto_percentile);
    c.thresholds.tie = get_or(t, "tie", p, c.thresholds.tie);
    c.thresholds.angle = get_or(t, "angle", p, c.thresholds.angle);
    if (c.thresholds.auto_percentile < 0.0 || c.thresholds.auto_percentile > 100.0) {
      fail(p + "auto_percentile", "must be in [0, 100]");
    }
    if (c.thresholds.tie < 0.0) fail(p + "tie", "must be >= 0");
    if (c.thresholds.angle < 0.0) fail(p + "angle", "must be >= 0");
  }

  if (j.contains("discern")) {
    const Json& d = j.at("discern");
    const std::string p = "discern.";
    reject_unknown(d, {"enabled", "strict", "rel_tol"}, p);
    c.discern.enabled = get_or(d, "enabled", p, c.discern.enabled);
    c.discern.strict = get_or(d, "strict", p, c.discern.strict);
    c.discern.rel_tol = get_or(d, "rel_tol", p, c.discern.rel_tol);
    if (!(c.discern.rel_tol > 0.0)) fail(p + "rel_tol", "must be positive");
  }

  if (j.contains("monte_carlo")) {
    const Json& m = j.at("monte_carlo");
    const std::string p = "monte_carlo.";
    reject_unknown(m, {"trials", "master_seed", "threads"}, p);
    c.monte_carlo.trials = get_or<std::size_t>(m, "trials", p, 1);
    c.monte_carlo.master_seed = get_or<std::uint64_t>(m, "master_seed", p, 1);
    c.monte_carlo.threads = get_or<unsigned>(m, "threads", p, 0);
    if (c.monte_carlo.trials < 1) fail(p + "trials", "must be >= 1");
  }

  c.output_dir = get_or<std::string>(j, "output_dir", "", "out/" + c.name);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_json(path)); }

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  if (c.model_name.empty() || c.model_name == "inline") {
    j["model"] = {{"A", matrix_to_json(c.model.A())},
                  {"B_u", matrix_to_json(c.model.B_u())},
                  {"C", matrix_to_json(c.model.C())},
                  {"D_u", matrix_to_json(c.model.D_u())},
                  {"K", matrix_to_json(c.model.K())},
                  {"Sigma_e", matrix_to_json(c.model.Sigma_e())}};
  } else {
    j["model"] = {{"preset", c.model_name}};
  }
  j["horizon"] = c.horizon;
  j["rank_policy"] = std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedOrder>) {
          return {{"kind", "fixed_order"}, {"order", p.order}};
        } else if constexpr (std::is_same_v<T, GapHeuristic>) {
          return {{"kind", "gap"}, {"factor", p.factor}};
        } else {
          return {{"kind", "threshold"}, {"rel_tol", p.rel_tol}};
        }
      },
      c.rank_policy);
  j["pe_rel_tol"] = c.pe_rel_tol;
  j["healthy"] = run_to_json(c.healthy);
  j["faulty"] = run_to_json(c.faulty);
  Json segs = Json::array();
  for (const auto& s : c.scenario.segments) {
    segs.push_back({{"start", s.start},
                    {"end", s.end},
                    {"channel", s.channel.label()},
                    {"signal", signal_to_json(s.signal)}});
  }
  j["scenario"] = std::move(segs);
  j["noise"] = std::visit(
      [](const auto& n) -> Json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NoiseOff>) {
          return "off";
        } else if constexpr (std::is_same_v<T, NoiseModel>) {
          return "model";
        } else if constexpr (std::is_same_v<T, NoiseSnr>) {
          return {{"snr_db", n.db}};
        } else {
          return {{"covariance", matrix_to_json(n.sigma)}};
        }
      },
      c.noise);
  j["dictionaries"] = c.dictionaries == DictionarySource::Data ? "data" : "nominal";
  j["thresholds"] = {{"residual", c.thresholds.residual ? Json(*c.thresholds.residual) : Json("auto")},
                     {"auto_factor", c.thresholds.auto_factor},
                     {"auto_percentile", c.thresholds.auto_percentile},
                     {"tie", c.thresholds.tie},
                     {"angle", c.thresholds.angle}};
  j["discern"] = {{"enabled", c.discern.enabled},
                  {"strict", c.discern.strict},
                  {"rel_tol", c.discern.rel_tol}};
  j["monte_carlo"] = {{"trials", c.monte_carlo.trials},
                      {"master_seed", c.monte_carlo.master_seed},
                      {"threads", c.monte_carlo.threads}};
  j["output_dir"] = c.output_dir.string();
  return j;
}

}  // namespace subfi

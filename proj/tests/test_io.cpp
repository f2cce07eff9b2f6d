#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "subfi/config.hpp"
#include "subfi/error.hpp"
#include "subfi/io.hpp"
#include "subfi/presets.hpp"
#include "support/systems.hpp"

using namespace subfi;
using subfi::testing::error_code;
using subfi::testing::random_matrix;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "subfi_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const Json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("format_double round-trips every double") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> e(-300, 300);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, e(rng)) * (i % 2 ? -1.0 : 1.0);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("matrix JSON round trip") {
  std::mt19937_64 rng(6);
  const Matrix m = random_matrix(rng, 3, 4);
  CHECK(matrix_from_json(matrix_to_json(m)) == m);
  CHECK(matrix_from_json(Json::array(), 3).cols() == 3);
  CHECK(matrix_from_json(Json::array(), 3).rows() == 0);
  const Vector v = random_matrix(rng, 5, 1);
  CHECK(vector_from_json(vector_to_json(v)) == v);
  CHECK(error_code([] { matrix_from_json(Json::parse("[[1, 2], [3]]")); }).has_value());
}

TEST_CASE("trajectory CSV round trip is exact") {
  const StateSpaceModel m = example_model();
  const Matrix u = generate_input(PrbsInput{1.0, 9}, 50, 1);
  Matrix faults = Matrix::Zero(50, 1);
  for (Index k = 10; k < 20; ++k) faults(k, 0) = 0.1 * double(k);
  const auto [Bf, Df] = m.fault_matrices({FaultChannel::sensor(2)});
  TrajectoryData d = simulate_with_faults(m, u, Bf, Df, faults, Noise::on(3));
  d.f_channel.assign(50, std::nullopt);
  d.f_value = Vector::Zero(50);
  for (Index k = 10; k < 20; ++k) {
    d.f_channel[std::size_t(k)] = FaultChannel::sensor(2);
    d.f_value(k) = faults(k, 0);
  }
  const auto path = scratch("traj.csv");
  write_trajectory_csv(d, path);
  const TrajectoryData back = read_trajectory_csv(path);
  CHECK(back.u == d.u);
  CHECK(back.y == d.y);
  CHECK(back.f_channel == d.f_channel);
  CHECK(back.f_value == d.f_value);
  CHECK(slurp(path).rfind("k,u_1,y_1,y_2,y_3,f_channel,f_value", 0) == 0);
}

TEST_CASE("filter and dictionary JSON round trip") {
  const StateSpaceModel m = example_model();
  const TrajectoryData d = simulate(m, generate_input(PrbsInput{1.0, 7}, 300, 1), {}, Noise::off());
  const KernelFilter f = estimate_kernel(d.u, d.y, 5, FixedOrder{4});
  const Json jf = filter_to_json(f);
  CHECK(jf.at("schema_version") == kSchemaVersion);
  const KernelFilter g = filter_from_json(Json::parse(jf.dump()));
  CHECK(g.K_u == f.K_u);
  CHECK(g.K_y == f.K_y);
  CHECK(g.l21 == f.l21);
  CHECK(g.r == f.r);
  CHECK(g.estimated_n == f.estimated_n);
  CHECK(filter_to_json(g).dump() == jf.dump());

  const FaultDictionarySet ds = build_dictionaries(f, build_signatures(f));
  const FaultDictionarySet back = dictionaries_from_json(Json::parse(dictionaries_to_json(ds).dump()));
  REQUIRE(back.entries.size() == ds.entries.size());
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    CHECK(back.entries[i].channel == ds.entries[i].channel);
    CHECK(back.entries[i].matrix == ds.entries[i].matrix);
    CHECK(back.entries[i].basis.basis() == ds.entries[i].basis.basis());
    CHECK(back.entries[i].rank == ds.entries[i].rank);
  }
}

TEST_CASE("decision and angle CSV layout") {
  AngleTrace a;
  a.k = {0, 1};
  a.channels = {FaultChannel::actuator(1), FaultChannel::sensor(1)};
  a.cos = Matrix(2, 2);
  a.cos << 1.0, 0.5, 0.25, 0.125;
  a.theta = a.cos.array().acos().matrix();
  a.residual_norm = Vector::Constant(2, 2.0);
  write_angles_csv(a, scratch("angles.csv"));
  CHECK(slurp(scratch("angles.csv")) == "k,residual_norm,cos_a1,cos_s1\n0,2,1,0.5\n1,2,0.25,0.125\n");
  const auto dec = decide(a, 1.0, 1e-6);
  write_decisions_csv(dec, scratch("decisions.csv"));
  const std::string text = slurp(scratch("decisions.csv"));
  CHECK(text.rfind("k,status,label,cos,margin\n0,fault,a1,1,0.5\n", 0) == 0);
}

TEST_CASE("config round trip and validation messages") {
  const ExperimentConfig cfg = load_config(SUBFI_SOURCE_DIR "/configs/scenario2.json");
  const Json full = config_to_json(cfg);
  CHECK(config_to_json(parse_config(full)).dump() == full.dump());

  Json j = read_json(SUBFI_SOURCE_DIR "/configs/scenario1.json");
  Json bad = j;
  bad["horizon"] = 0;
  CHECK(config_error(bad).find("config.horizon") != std::string::npos);
  bad = j;
  bad["colour"] = "red";
  CHECK(config_error(bad).find("colour") != std::string::npos);
  bad = j;
  bad["scenario"][0]["signal"]["kind"] = "sawtooth";
  CHECK(config_error(bad).find("config.scenario") != std::string::npos);
  bad = j;
  bad["scenario"][0]["channel"] = "s9";
  CHECK_FALSE(config_error(bad).empty());
  bad = j;
  bad["schema_version"] = 99;
  CHECK(config_error(bad).find("schema_version") != std::string::npos);
  bad = j;
  bad["noise"] = Json{{"snr_db", 20}, {"jitter", 1}};
  CHECK(config_error(bad).find("jitter") != std::string::npos);
  CHECK(error_code([] { load_config(scratch("missing.json")); }).has_value());
}

#include "subfi/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "subfi/error.hpp"

namespace subfi {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::Io,
                path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

Json policy_to_json(const RankPolicy& policy) {
  return std::visit(
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
      policy);
}

RankPolicy policy_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed_order") return FixedOrder{j.at("order").get<std::size_t>()};
  if (kind == "gap") return GapHeuristic{j.value("factor", 10.0)};
  if (kind == "threshold") return Threshold{j.value("rel_tol", kDefaultRelTol)};
  throw Error(ErrorCode::InvalidConfig, "unknown rank policy '" + kind + "'");
}

Json basis_to_json(const SubspaceBasis& b) {
  return {{"ambient_dim", b.ambient_dim()}, {"columns", matrix_to_json(b.basis())}};
}

SubspaceBasis basis_from_json(const Json& j) {
  const Index ambient = j.at("ambient_dim").get<Index>();
  Matrix cols = matrix_from_json(j.at("columns"));
  if (cols.size() == 0) return SubspaceBasis::empty(ambient);
  return SubspaceBasis(ambient, std::move(cols));
}

void check_schema(const Json& j, const char* what) {
  if (j.value("schema_version", -1) != kSchemaVersion) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(what) + ": unsupported schema_version (expected " +
                    std::to_string(kSchemaVersion) + ")");
  }
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Index empty_cols) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "matrix must be an array of rows");
  if (j.empty()) return Matrix(0, empty_cols);
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(ErrorCode::InvalidConfig, "matrix rows have unequal lengths");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  require_finite(m, "matrix");
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "vector must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

void write_trajectory_csv(const TrajectoryData& data, const fs::path& path) {
  data.validate();
  const bool with_fault = !data.f_channel.empty();
  std::ofstream out = open_out(path);
  out << 'k';
  for (Index i = 0; i < data.u.cols(); ++i) out << ",u_" << i + 1;
  for (Index i = 0; i < data.y.cols(); ++i) out << ",y_" << i + 1;
  if (with_fault) out << ",f_channel,f_value";
  out << '\n';
  for (Index k = 0; k < data.samples(); ++k) {
    out << k;
    for (Index i = 0; i < data.u.cols(); ++i) out << ',' << format_double(data.u(k, i));
    for (Index i = 0; i < data.y.cols(); ++i) out << ',' << format_double(data.y(k, i));
    if (with_fault) {
      const auto& c = data.f_channel[static_cast<std::size_t>(k)];
      out << ',' << (c ? c->label() : std::string()) << ',' << format_double(data.f_value(k));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

TrajectoryData read_trajectory_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, path.string() + ": empty file");
  const std::vector<std::string> header = split(line);
  if (header.empty() || header[0] != "k") {
    throw Error(ErrorCode::Io, path.string() + ": header must start with k");
  }
  Index nu = 0, ny = 0;
  bool with_fault = false;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.rfind("u_", 0) == 0 && ny == 0 && !with_fault) {
      ++nu;
    } else if (h.rfind("y_", 0) == 0 && !with_fault) {
      ++ny;
    } else if (h == "f_channel" && i + 1 < header.size() && header[i + 1] == "f_value" &&
               i + 2 == header.size()) {
      with_fault = true;
      ++i;
    } else {
      throw Error(ErrorCode::Io, path.string() + ": unexpected column '" + h + "'");
    }
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::optional<FaultChannel>> channels;
  std::vector<double> fvals;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(header.size()) + " fields");
    }
    const auto k = static_cast<long>(parse_double(cells[0], path, lineno));
    if (k != static_cast<long>(rows.size())) {
      throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(lineno) +
                                     ": k must count up from 0");
    }
    std::vector<double> vals;
    for (Index i = 0; i < nu + ny; ++i) {
      vals.push_back(parse_double(cells[static_cast<std::size_t>(1 + i)], path, lineno));
    }
    rows.push_back(std::move(vals));
    if (with_fault) {
      const std::string& label = cells[static_cast<std::size_t>(1 + nu + ny)];
      channels.push_back(label.empty() ? std::nullopt
                                       : std::optional<FaultChannel>(FaultChannel::parse(label)));
      fvals.push_back(parse_double(cells.back(), path, lineno));
    }
  }

  TrajectoryData data;
  const auto T = static_cast<Index>(rows.size());
  data.u.resize(T, nu);
  data.y.resize(T, ny);
  for (Index k = 0; k < T; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    for (Index i = 0; i < nu; ++i) data.u(k, i) = r[static_cast<std::size_t>(i)];
    for (Index i = 0; i < ny; ++i) data.y(k, i) = r[static_cast<std::size_t>(nu + i)];
  }
  if (with_fault) {
    data.f_channel = std::move(channels);
    data.f_value = Eigen::Map<const Vector>(fvals.data(), static_cast<Index>(fvals.size()));
  }
  data.validate();
  return data;
}

Json filter_to_json(const KernelFilter& f) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["L"] = f.L;
  j["n_u"] = f.n_u;
  j["n_y"] = f.n_y;
  j["r"] = f.r;
  j["estimated_n"] = f.estimated_n;
  j["rank_policy"] = policy_to_json(f.policy);
  j["K_u"] = matrix_to_json(f.K_u);
  j["K_y"] = matrix_to_json(f.K_y);
  j["l21"] = matrix_to_json(f.l21);
  j["input_toeplitz"] = matrix_to_json(f.input_toeplitz);
  j["l21_basis"] = basis_to_json(f.l21_basis);
  j["l22_basis"] = basis_to_json(f.l22_basis);
  j["l22_singular_values"] = vector_to_json(f.l22_singular_values);
  return j;
}

KernelFilter filter_from_json(const Json& j) {
  check_schema(j, "filter");
  KernelFilter f;
  f.L = j.at("L").get<Index>();
  f.n_u = j.at("n_u").get<Index>();
  f.n_y = j.at("n_y").get<Index>();
  f.r = j.at("r").get<Index>();
  f.estimated_n = j.at("estimated_n").get<std::size_t>();
  f.policy = policy_from_json(j.at("rank_policy"));
  f.K_u = matrix_from_json(j.at("K_u"), f.L * f.n_u);
  f.K_y = matrix_from_json(j.at("K_y"), f.L * f.n_y);
  f.l21 = matrix_from_json(j.at("l21"), f.L * f.n_u);
  f.input_toeplitz = matrix_from_json(j.at("input_toeplitz"), f.L * f.n_u);
  f.l21_basis = basis_from_json(j.at("l21_basis"));
  f.l22_basis = basis_from_json(j.at("l22_basis"));
  f.l22_singular_values = vector_from_json(j.at("l22_singular_values"));
  if (f.K_u.rows() != f.r || f.K_y.rows() != f.r || f.K_u.cols() != f.L * f.n_u ||
      f.K_y.cols() != f.L * f.n_y) {
    throw Error(ErrorCode::DimensionMismatch, "filter document has inconsistent shapes");
  }
  return f;
}

Json dictionaries_to_json(const FaultDictionarySet& dicts) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["L"] = dicts.L;
  j["residual_dim"] = dicts.residual_dim;
  Json entries = Json::array();
  for (const auto& d : dicts.entries) {
    entries.push_back({{"channel", d.channel.label()},
                       {"rank", d.rank},
                       {"matrix", matrix_to_json(d.matrix)},
                       {"basis", basis_to_json(d.basis)}});
  }
  j["entries"] = std::move(entries);
  return j;
}

FaultDictionarySet dictionaries_from_json(const Json& j) {
  check_schema(j, "dictionaries");
  FaultDictionarySet s;
  s.L = j.at("L").get<Index>();
  s.residual_dim = j.at("residual_dim").get<Index>();
  for (const auto& e : j.at("entries")) {
    FaultDictionary d;
    d.channel = FaultChannel::parse(e.at("channel").get<std::string>());
    d.rank = e.at("rank").get<std::size_t>();
    d.matrix = matrix_from_json(e.at("matrix"), s.L);
    d.basis = basis_from_json(e.at("basis"));
    s.entries.push_back(std::move(d));
  }
  return s;
}

Json report_to_json(const DiscernibilityReport& rep) {
  auto count_json = [](const ZeroCount& z) -> Json {
    return {{"finite", z.finite},
            {"infinite", z.infinite},
            {"total", z.total},
            {"horizon", z.horizon},
            {"tau", z.tau}};
  };
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["L"] = rep.L;
  j["outputs_observable"] =
      rep.outputs_observable ? Json(*rep.outputs_observable) : Json(nullptr);
  Json zeros = Json::array();
  for (const auto& z : rep.zeros) {
    zeros.push_back({{"channel", z.channel.label()},
                     {"data_nullity", z.data_nullity},
                     {"oracle", z.oracle ? count_json(*z.oracle) : Json(nullptr)}});
  }
  j["zeros"] = std::move(zeros);
  Json pairs = Json::array();
  for (const auto& p : rep.pairs) {
    Json e;
    e["first"] = p.first.label();
    e["second"] = p.second.label();
    e["case"] = to_string(p.theorem_case);
    e["d_cap"] = p.d_cap;
    e["nullity_form"] = p.nullity_form ? Json(*p.nullity_form) : Json(nullptr);
    e["predicted"] = p.predicted ? Json(*p.predicted) : Json(nullptr);
    e["indiscernible"] = p.d_cap > 0;
    e["intersection_basis"] = matrix_to_json(p.basis.basis());
    e["fault_directions"] =
        p.fault_directions ? matrix_to_json(*p.fault_directions) : Json(nullptr);
    pairs.push_back(std::move(e));
  }
  j["pairs"] = std::move(pairs);
  j["notes"] = rep.notes;
  return j;
}

void write_residuals_csv(const ResidualTrace& residual, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << 'k';
  for (Index i = 0; i < residual.dim(); ++i) out << ",r_" << i + 1;
  out << '\n';
  for (Index t = 0; t < residual.size(); ++t) {
    out << residual.k[static_cast<std::size_t>(t)];
    for (Index i = 0; i < residual.dim(); ++i) out << ',' << format_double(residual.r(t, i));
    out << '\n';
  }
}

void write_angles_csv(const AngleTrace& angles, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "k,residual_norm";
  for (const auto& c : angles.channels) out << ",cos_" << c.label();
  out << '\n';
  for (Index t = 0; t < angles.size(); ++t) {
    out << angles.k[static_cast<std::size_t>(t)] << ',' << format_double(angles.residual_norm(t));
    for (Index c = 0; c < angles.cos.cols(); ++c) out << ',' << format_double(angles.cos(t, c));
    out << '\n';
  }
}

void write_decisions_csv(const std::vector<Decision>& decisions, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "k,status,label,cos,margin\n";
  for (const auto& d : decisions) {
    const char* status = d.status == DecisionStatus::Healthy ? "healthy"
                         : d.status == DecisionStatus::Fault ? "fault"
                                                             : "ambiguous";
    out << d.k << ',' << status << ',' << d.label() << ',' << format_double(d.cos) << ','
        << format_double(d.margin) << '\n';
  }
}

void write_json(const Json& j, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

}  // namespace subfi

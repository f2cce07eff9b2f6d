#pragma once

// File formats: trajectory CSV, JSON documents for filters, dictionaries and
// discernibility reports, and tidy CSV traces for plotting.

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "subfi/classifier.hpp"
#include "subfi/discern.hpp"
#include "subfi/kernel.hpp"
#include "subfi/system.hpp"

namespace subfi {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json matrix_to_json(const Matrix& m);
/// Row-major nested arrays; an empty array gives a 0×0 matrix unless cols is given.
Matrix matrix_from_json(const Json& j, Index empty_cols = 0);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// Header k,u_1..u_nu,y_1..y_ny[,f_channel,f_value]; values printed with %.17g.
void write_trajectory_csv(const TrajectoryData& data, const std::filesystem::path& path);
TrajectoryData read_trajectory_csv(const std::filesystem::path& path);

Json filter_to_json(const KernelFilter& filter);
KernelFilter filter_from_json(const Json& j);

Json dictionaries_to_json(const FaultDictionarySet& dicts);
FaultDictionarySet dictionaries_from_json(const Json& j);

Json report_to_json(const DiscernibilityReport& report);

void write_residuals_csv(const ResidualTrace& residual, const std::filesystem::path& path);
/// k,residual_norm,cos_<channel>...
void write_angles_csv(const AngleTrace& angles, const std::filesystem::path& path);
/// k,status,label,cos,margin
void write_decisions_csv(const std::vector<Decision>& decisions, const std::filesystem::path& path);

void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

/// %.17g formatting shared by every writer.
std::string format_double(double v);

}  // namespace subfi

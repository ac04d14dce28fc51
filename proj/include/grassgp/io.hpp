#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassgp/pipeline.hpp"

namespace grassgp {

inline constexpr int kFormatVersion = 1;

/// %.17g: shortest fixed-width rendering that round-trips every binary64.
std::string format_double(double v);

/// One matrix row per line, comma separated.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

struct ParamTable {
  std::vector<std::int64_t> ids;
  Matrix values;
};

/// Header `sample_id,xi_1,...,xi_d`. An empty table still writes the header
/// (with d = `dim`).
void write_params_csv(const std::filesystem::path& path, const ParamTable& table);
ParamTable read_params_csv(const std::filesystem::path& path);

struct Dataset {
  ParamTable params;
  Shape shape;
  std::vector<Matrix> snapshots;
  nlohmann::json generator = nlohmann::json::object();
};

/// manifest.json + params.csv + snap_NNNN.csv.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& dir);

std::string snapshot_file_name(std::size_t index);

nlohmann::json model_to_json(const SurrogateModel& model);
SurrogateModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_model(const std::filesystem::path& path);

/// cluster_id,size,epsilon_h,passed,n_sublabels
std::string diagnostics_csv(const SurrogateModel& model);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace grassgp

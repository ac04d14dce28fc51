#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "grassgp/io.hpp"
#include "support.hpp"

using namespace grassgp;
using namespace grassgp::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("grassgp_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void expect_parse_error_at(const fs::path& file, int line, auto&& reader) {
  try {
    reader(file);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    const std::string where = file.string() + ":" + std::to_string(line) + ":";
    EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(1);
  const Matrix m = gaussian(rng, 50, 1);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double v = m(i) * std::pow(10.0, static_cast<double>(i % 20) - 10.0);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
}

TEST(MatrixCsv, RoundTrip) {
  const fs::path dir = scratch("matrix");
  std::mt19937_64 rng(2);
  const Matrix m = gaussian(rng, 7, 4);
  write_matrix_csv(dir / "m.csv", m);
  EXPECT_EQ(read_matrix_csv(dir / "m.csv"), m);
}

TEST(MatrixCsv, ReportsFileAndLine) {
  const fs::path dir = scratch("matrix_bad");
  write_text(dir / "a.csv", "1,2\n3,x\n");
  expect_parse_error_at(dir / "a.csv", 2, [](const fs::path& p) { return read_matrix_csv(p); });
  write_text(dir / "b.csv", "1,2\n3,4\n5\n");
  expect_parse_error_at(dir / "b.csv", 3, [](const fs::path& p) { return read_matrix_csv(p); });
  EXPECT_THROW(read_matrix_csv(dir / "missing.csv"), Error);
}

TEST(ParamsCsv, RoundTripAndHeader) {
  const fs::path dir = scratch("params");
  ParamTable t;
  t.ids = {0, 1, 5};
  t.values = Matrix(3, 2);
  t.values << 0.1, -0.2, 0.3, 0.4, -1.0, 1.0;
  write_params_csv(dir / "p.csv", t);
  EXPECT_EQ(read_text(dir / "p.csv").substr(0, 19), "sample_id,xi_1,xi_2");
  const ParamTable back = read_params_csv(dir / "p.csv");
  EXPECT_EQ(back.ids, t.ids);
  EXPECT_EQ(back.values, t.values);
}

TEST(ParamsCsv, ReportsFileAndLine) {
  const fs::path dir = scratch("params_bad");
  write_text(dir / "h.csv", "id,xi_1\n0,1\n");
  expect_parse_error_at(dir / "h.csv", 1, [](const fs::path& p) { return read_params_csv(p); });
  write_text(dir / "f.csv", "sample_id,xi_1\n0,1\n1,2,3\n");
  expect_parse_error_at(dir / "f.csv", 3, [](const fs::path& p) { return read_params_csv(p); });
  write_text(dir / "i.csv", "sample_id,xi_1\n0.5,1\n");
  expect_parse_error_at(dir / "i.csv", 2, [](const fs::path& p) { return read_params_csv(p); });
}

TEST(DatasetIo, RoundTrip) {
  const fs::path dir = scratch("dataset");
  std::mt19937_64 rng(3);
  Dataset d;
  d.shape = {6, 4};
  d.params.ids = {0, 1, 2};
  d.params.values = gaussian(rng, 3, 2);
  for (int i = 0; i < 3; ++i) d.snapshots.push_back(gaussian(rng, 6, 4));
  d.generator = {{"name", "test"}};
  write_dataset(dir, d);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / snapshot_file_name(2)));
  const Dataset back = read_dataset(dir);
  EXPECT_EQ(back.shape, d.shape);
  EXPECT_EQ(back.params.values, d.params.values);
  ASSERT_EQ(back.snapshots.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.snapshots[i], d.snapshots[i]);
  EXPECT_EQ(back.generator, d.generator);
}

TEST(DatasetIo, ShapeDisagreementIsReported) {
  const fs::path dir = scratch("dataset_bad");
  Dataset d;
  d.shape = {2, 2};
  d.params.ids = {0};
  d.params.values = Matrix::Zero(1, 1);
  d.snapshots.push_back(Matrix::Ones(2, 2));
  write_dataset(dir, d);
  write_matrix_csv(dir / snapshot_file_name(0), Matrix::Ones(3, 2));
  EXPECT_THROW(read_dataset(dir), Error);
}

TEST(SnapshotFileName, ZeroPadded) {
  EXPECT_EQ(snapshot_file_name(7), "snap_0007.csv");
  EXPECT_EQ(snapshot_file_name(1234), "snap_1234.csv");
}

TEST(ModelIo, ByteIdenticalRoundTrip) {
  const SyntheticFamilies fam(4);
  const auto train = fam.sample(60, 5);
  SurrogateConfig config;
  config.clustering.n_min_points = 8;
  config.seed = 3;
  const SurrogateModel model = train_surrogate(train.params, train.snapshots, config);

  const fs::path dir = scratch("model");
  save_model(dir / "a.json", model);
  const SurrogateModel back = load_model(dir / "a.json");
  save_model(dir / "b.json", back);
  EXPECT_EQ(read_text(dir / "a.json"), read_text(dir / "b.json"));

  const Vector x = Vector::Constant(2, 0.15);
  EXPECT_EQ(predict_solution(model, x), predict_solution(back, x));
  EXPECT_EQ(diagnostics_csv(model), diagnostics_csv(back));
}

TEST(ModelIo, NonFiniteErrorsSurvive) {
  const SyntheticFamilies fam(6);
  const auto train = fam.sample(60, 7);
  SurrogateConfig config;
  config.clustering.n_min_points = 8;
  SurrogateModel model = train_surrogate(train.params, train.snapshots, config);
  model.diagnostics.per_cluster_mean_error[0] = std::numeric_limits<double>::infinity();
  const SurrogateModel back = model_from_json(model_to_json(model));
  EXPECT_TRUE(std::isinf(back.diagnostics.per_cluster_mean_error[0]));
}

TEST(ModelIo, RejectsGarbage) {
  const fs::path dir = scratch("model_bad");
  write_text(dir / "x.json", "{not json");
  EXPECT_THROW(load_model(dir / "x.json"), Error);
  write_text(dir / "y.json", R"({"format": "something-else", "version": 1})");
  try {
    load_model(dir / "y.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}

TEST(DiagnosticsCsv, HeaderAndRows) {
  const SyntheticFamilies fam(8);
  const auto train = fam.sample(60, 9);
  SurrogateConfig config;
  config.clustering.n_min_points = 8;
  const SurrogateModel model = train_surrogate(train.params, train.snapshots, config);
  const std::string csv = diagnostics_csv(model);
  EXPECT_EQ(csv.rfind("cluster_id,size,epsilon_h,passed,n_sublabels\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), model.clusters.size() + 1);
}

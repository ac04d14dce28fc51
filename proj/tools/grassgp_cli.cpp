// Command-line front end: dataset generation, training, prediction and reports.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "grassgp/io.hpp"
#include "grassgp/ko.hpp"
#include "grassgp/pipeline.hpp"
#include "grassgp/random.hpp"

namespace fs = std::filesystem;
using namespace grassgp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitWarning = 2;

Shape parse_shape(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw Error(ErrorKind::ShapeError, "shape '" + text + "' is not of the form NFxMF");
  try {
    std::size_t used_rows = 0;
    std::size_t used_cols = 0;
    const std::string r = text.substr(0, x);
    const std::string c = text.substr(x + 1);
    const long rows = std::stol(r, &used_rows);
    const long cols = std::stol(c, &used_cols);
    if (used_rows != r.size() || used_cols != c.size() || rows < 1 || cols < 1) throw std::invalid_argument(text);
    return {rows, cols};
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::ShapeError, "shape '" + text + "' is not of the form NFxMF");
  }
}

struct GenerateArgs {
  int n_samples = 1024;
  std::uint64_t seed = 0;
  std::string out;
  std::string shape;
  double t_final = 30.0;
  double dt = 0.003;
};

int run_generate(const GenerateArgs& a) {
  KoConfig config{a.t_final, a.dt};
  const Shape shape = a.shape.empty() ? closest_square_shape(config.steps()) : parse_shape(a.shape);
  KoDataset ko = sample_ko_dataset(a.n_samples, a.seed, config, shape);

  Dataset data;
  data.shape = shape;
  data.params.values = ko.params;
  for (int i = 0; i < a.n_samples; ++i) data.params.ids.push_back(i);
  data.snapshots = std::move(ko.snapshots);
  data.generator = {{"name", "kraichnan-orszag"},
                    {"rng", PortableRng::kName},
                    {"seed", a.seed},
                    {"t_final", a.t_final},
                    {"dt", a.dt},
                    {"integrator", "rk4"}};
  write_dataset(a.out, data);
  std::cout << "wrote " << a.n_samples << " samples of shape " << shape.rows << "x" << shape.cols << " to " << a.out
            << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string out;
  int n_start = 2;
  int n_max = 0;
  int n_min_points = 10;
  double threshold = 1e-3;
  double pass_fraction = 0.95;
  std::uint64_t seed = 0;
  std::string subcluster = "auto";
};

int run_train(const TrainArgs& a) {
  const Dataset data = read_dataset(a.data);
  SurrogateConfig config;
  config.clustering.n_start = a.n_start;
  config.clustering.n_max_clusters = a.n_max;
  config.clustering.n_min_points = a.n_min_points;
  config.clustering.error_threshold = a.threshold;
  config.clustering.pass_fraction = a.pass_fraction;
  config.seed = a.seed;
  config.subcluster = a.subcluster == "on" ? SubclusterMode::On
                      : a.subcluster == "off" ? SubclusterMode::Off
                                               : SubclusterMode::Auto;

  const SurrogateModel model = train_surrogate(data.params.values, data.snapshots, config);
  save_model(a.out, model);
  const fs::path diag_path = fs::path(a.out).replace_extension(".diagnostics.csv");
  write_text(diag_path, diagnostics_csv(model));

  const auto& d = model.diagnostics;
  std::cout << "clusters: " << model.clusters.size() << "  pass fraction: " << d.pass_fraction_achieved
            << "  converged: " << (d.converged ? "yes" : "no") << "\n"
            << "model: " << a.out << "\ndiagnostics: " << diag_path.string() << "\n";
  if (!d.converged) {
    std::cerr << "warning: no cluster count up to the budget met the pass fraction; kept the best candidate (n_c = "
              << d.chosen_n_c << ")\n";
    return kExitWarning;
  }
  return kExitOk;
}

int run_predict(const std::string& model_path, const std::string& params_path, const std::string& out) {
  const SurrogateModel model = load_model(model_path);
  const ParamTable params = read_params_csv(params_path);
  const auto n = params.values.rows();
  if (n > 0 && params.values.cols() != model.train_params.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                params_path + ":2: row with sample_id " + std::to_string(params.ids.front()) + " has " +
                    std::to_string(params.values.cols()) + " components, model expects " +
                    std::to_string(model.train_params.cols()));
  }
  Dataset result;
  result.shape = model.shape;
  result.params = params;
  if (n == 0) result.params.values = Matrix(0, model.train_params.cols());
  result.generator = {{"name", "surrogate"}, {"model", model_path}};
  std::string notes = "sample_id,cluster_id,sublabel,sigma_order_violated,sigma_clamped\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    Prediction p;
    try {
      p = predict_solution_detailed(model, params.values.row(i).transpose());
    } catch (const Error& e) {
      throw Error(e.kind(), params_path + ":" + std::to_string(i + 2) + ": " + e.detail());
    }
    notes += std::to_string(params.ids[static_cast<std::size_t>(i)]) + ',' + std::to_string(p.assignment.cluster) +
             ',' + std::to_string(p.assignment.sublabel) + ',' + (p.sigma_order_violated ? "1" : "0") + ',' +
             (p.sigma_clamped ? "1" : "0") + '\n';
    result.snapshots.push_back(std::move(p.field));
  }
  write_dataset(out, result);
  write_text(fs::path(out) / "prediction_diagnostics.csv", notes);
  std::cout << "wrote " << n << " predictions to " << out << "\n";
  return kExitOk;
}

int run_evaluate(const std::string& model_path, const std::string& data_path, const std::string& out) {
  const SurrogateModel model = load_model(model_path);
  const Dataset data = read_dataset(data_path);
  if (data.shape != model.shape) {
    throw Error(ErrorKind::ShapeError, data_path + ": snapshot shape " + std::to_string(data.shape.rows) + "x" +
                                           std::to_string(data.shape.cols) + " differs from the model's " +
                                           std::to_string(model.shape.rows) + "x" + std::to_string(model.shape.cols));
  }
  if (data.params.values.rows() > 0 && data.params.values.cols() != model.train_params.cols()) {
    throw Error(ErrorKind::DimensionMismatch, data_path + ": parameter dimension differs from the model's");
  }
  const Evaluation ev = evaluate(model, data.params.values, data.snapshots);
  std::string text = "sample_id,frobenius_error\n";
  for (std::size_t i = 0; i < ev.per_point.size(); ++i) {
    text += std::to_string(data.params.ids[i]) + ',' + format_double(ev.per_point[i]) + '\n';
  }
  if (!ev.per_point.empty()) {
    const auto [lo, hi] = std::minmax_element(ev.per_point.begin(), ev.per_point.end());
    text += "mean," + format_double(ev.mean_error) + '\n';
    text += "min," + format_double(*lo) + '\n';
    text += "max," + format_double(*hi) + '\n';
  }
  write_text(out, text);
  std::cout << "mean error " << format_double(ev.mean_error) << " over " << ev.per_point.size() << " samples\n";
  return kExitOk;
}

int run_inspect(const std::string& model_path, const std::string& out) {
  const SurrogateModel model = load_model(model_path);
  std::string text = "sample_id";
  for (Eigen::Index j = 0; j < model.train_params.cols(); ++j) text += ",xi_" + std::to_string(j + 1);
  text += ",cluster_id,sublabel,epsilon_h\n";
  const auto& eps = model.diagnostics.per_cluster_mean_error;
  for (Eigen::Index i = 0; i < model.train_params.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto label = static_cast<std::size_t>(model.labels[k]);
    text += std::to_string(i);
    for (Eigen::Index j = 0; j < model.train_params.cols(); ++j) text += ',' + format_double(model.train_params(i, j));
    text += ',' + std::to_string(model.labels[k]) + ',' + std::to_string(model.sublabels[k]) + ',' +
            (label < eps.size() ? format_double(eps[label]) : std::string("nan")) + '\n';
  }
  write_text(out, text);
  std::cout << "wrote " << model.train_params.rows() << " rows to " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grassmannian clustered-GP surrogates for high-dimensional model outputs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate-ko", "Sample the Kraichnan-Orszag benchmark");
  generate->add_option("--n-samples", gen.n_samples, "Number of samples")->check(CLI::NonNegativeNumber);
  generate->add_option("--seed", gen.seed, "RNG seed");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--shape", gen.shape, "Snapshot shape NFxMF (default: closest to square)");
  generate->add_option("--t-final", gen.t_final, "Integration horizon");
  generate->add_option("--dt", gen.dt, "RK4 time step");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a surrogate on a dataset directory");
  train->add_option("--data", tr.data, "Dataset directory")->required();
  train->add_option("--out", tr.out, "Model bundle path")->required();
  train->add_option("--n-start", tr.n_start, "Initial cluster count");
  train->add_option("--n-max", tr.n_max, "Maximum cluster count (0: N / n-min-points)");
  train->add_option("--n-min-points", tr.n_min_points, "Minimum cluster size");
  train->add_option("--threshold", tr.threshold, "Projection-error threshold per cluster");
  train->add_option("--pass-fraction", tr.pass_fraction, "Fraction of clusters that must pass");
  train->add_option("--seed", tr.seed, "Clustering seed");
  train->add_option("--subcluster", tr.subcluster, "Parameter-space sub-clustering")
      ->check(CLI::IsMember({"auto", "on", "off"}));

  std::string model_path;
  std::string params_path;
  std::string data_path;
  std::string out_path;
  auto* predict = app.add_subcommand("predict", "Predict snapshots at new parameter points");
  predict->add_option("--model", model_path, "Model bundle")->required();
  predict->add_option("--params", params_path, "Parameter CSV")->required();
  predict->add_option("--out", out_path, "Output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "Frobenius error report on a test dataset");
  eval->add_option("--model", model_path, "Model bundle")->required();
  eval->add_option("--data", data_path, "Test dataset directory")->required();
  eval->add_option("--out", out_path, "Report CSV")->required();

  auto* inspect = app.add_subcommand("inspect-clusters", "Per-sample cluster table");
  inspect->add_option("--model", model_path, "Model bundle")->required();
  inspect->add_option("--out", out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train) return run_train(tr);
    if (*predict) return run_predict(model_path, params_path, out_path);
    if (*eval) return run_evaluate(model_path, data_path, out_path);
    if (*inspect) return run_inspect(model_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

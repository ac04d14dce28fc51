#include "grassgp/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace grassgp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& field, const fs::path& path, std::size_t line) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::string text;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

Matrix read_matrix_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw Error(ErrorKind::Parse, path.string() + ": empty matrix file");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<double> row;
    for (const auto& f : split_commas(lines[i])) row.push_back(parse_double(f, path, i + 1));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(i + 1) + ": expected " +
                                        std::to_string(rows.front().size()) + " columns, found " +
                                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_params_csv(const fs::path& path, const ParamTable& table) {
  if (static_cast<Eigen::Index>(table.ids.size()) != table.values.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "parameter ids and values disagree in length");
  }
  std::string text = "sample_id";
  for (Eigen::Index j = 0; j < table.values.cols(); ++j) text += ",xi_" + std::to_string(j + 1);
  text += '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    text += std::to_string(table.ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) text += ',' + format_double(table.values(i, j));
    text += '\n';
  }
  write_text(path, text);
}

ParamTable read_params_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  ParamTable table;
  if (lines.empty()) {
    table.values = Matrix(0, 0);
    return table;
  }
  const auto header = split_commas(lines.front());
  if (header.empty() || header.front() != "sample_id") {
    throw Error(ErrorKind::Parse, path.string() + ":1: header must start with sample_id");
  }
  const auto dim = static_cast<Eigen::Index>(header.size() - 1);
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (header[static_cast<std::size_t>(j + 1)] != "xi_" + std::to_string(j + 1)) {
      throw Error(ErrorKind::Parse, path.string() + ":1: unexpected column '" +
                                        header[static_cast<std::size_t>(j + 1)] + "'");
    }
  }
  table.values = Matrix(static_cast<Eigen::Index>(lines.size() - 1), dim);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_commas(lines[i]);
    if (static_cast<Eigen::Index>(fields.size()) != dim + 1) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(i + 1) + ": expected " +
                                        std::to_string(dim + 1) + " fields, found " + std::to_string(fields.size()));
    }
    const double id = parse_double(fields[0], path, i + 1);
    if (id != std::floor(id)) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(i + 1) + ": sample_id must be an integer");
    }
    table.ids.push_back(static_cast<std::int64_t>(id));
    for (Eigen::Index j = 0; j < dim; ++j) {
      table.values(static_cast<Eigen::Index>(i - 1), j) = parse_double(fields[static_cast<std::size_t>(j + 1)], path, i + 1);
    }
  }
  return table;
}

std::string snapshot_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%04zu.csv", index);
  return buf;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  if (static_cast<std::size_t>(data.params.values.rows()) != data.snapshots.size()) {
    throw Error(ErrorKind::ShapeMismatch, "dataset has differing numbers of parameters and snapshots");
  }
  json files = json::array();
  for (std::size_t i = 0; i < data.snapshots.size(); ++i) {
    const auto& s = data.snapshots[i];
    if (s.rows() != data.shape.rows || s.cols() != data.shape.cols) {
      throw Error(ErrorKind::ShapeMismatch, "snapshot " + std::to_string(i) + " does not match the dataset shape");
    }
    write_matrix_csv(dir / snapshot_file_name(i), s);
    files.push_back(snapshot_file_name(i));
  }
  write_params_csv(dir / "params.csv", data.params);
  json manifest = {
      {"format", "grassgp-dataset"},
      {"version", kFormatVersion},
      {"n_samples", data.snapshots.size()},
      {"param_dim", data.params.values.cols()},
      {"shape", {data.shape.rows, data.shape.cols}},
      {"layout", "column-major"},
      {"generator", data.generator},
      {"params", "params.csv"},
      {"snapshots", files},
  };
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, manifest_path.string() + ": " + e.what());
  }
  Dataset data;
  try {
    if (manifest.at("format") != "grassgp-dataset" || manifest.at("version") != kFormatVersion) {
      throw Error(ErrorKind::Parse, manifest_path.string() + ": unsupported format or version");
    }
    if (manifest.at("layout") != "column-major") {
      throw Error(ErrorKind::Parse, manifest_path.string() + ": only column-major layout is supported");
    }
    data.shape = {manifest.at("shape").at(0).get<Eigen::Index>(), manifest.at("shape").at(1).get<Eigen::Index>()};
    data.generator = manifest.value("generator", json::object());
    data.params = read_params_csv(dir / manifest.at("params").get<std::string>());
    const auto n = manifest.at("n_samples").get<std::size_t>();
    const auto& files = manifest.at("snapshots");
    if (files.size() != n || static_cast<std::size_t>(data.params.values.rows()) != n) {
      throw Error(ErrorKind::Parse, manifest_path.string() + ": n_samples disagrees with the listed files");
    }
    if (n > 0 && data.params.values.cols() != manifest.at("param_dim").get<Eigen::Index>()) {
      throw Error(ErrorKind::Parse, manifest_path.string() + ": param_dim disagrees with params file");
    }
    for (const auto& f : files) {
      const fs::path p = dir / f.get<std::string>();
      Matrix m = read_matrix_csv(p);
      if (m.rows() != data.shape.rows || m.cols() != data.shape.cols) {
        throw Error(ErrorKind::ShapeMismatch, p.string() + ": shape " + std::to_string(m.rows()) + "x" +
                                                  std::to_string(m.cols()) + " differs from the manifest");
      }
      data.snapshots.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, manifest_path.string() + ": " + e.what());
  }
  return data;
}

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double to_double(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorKind::Parse, "bad number '" + s + "'");
  }
  return j.get<double>();
}

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index k = 0; k < m.size(); ++k) data.push_back(number(m.data()[k]));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error(ErrorKind::Parse, "matrix size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = to_double(data[static_cast<std::size_t>(k)]);
  return m;
}

json doubles(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::vector<double> doubles_from(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(to_double(x));
  return out;
}

json gp_json(const GpModel& gp) {
  return {{"inputs", matrix_json(gp.inputs())},
          {"outputs", matrix_json(gp.outputs())},
          {"length_scale", gp.length_scale()},
          {"nugget", gp.nugget()},
          {"standardize_inputs", gp.standardize_inputs()}};
}

GpModel gp_from(const json& j) {
  return GpModel::from_state(matrix_from(j.at("inputs")), matrix_from(j.at("outputs")),
                             j.at("length_scale").get<double>(), j.at("nugget").get<double>(),
                             j.at("standardize_inputs").get<bool>());
}

const char* subcluster_name(SubclusterMode m) {
  switch (m) {
    case SubclusterMode::Auto: return "auto";
    case SubclusterMode::On: return "on";
    case SubclusterMode::Off: return "off";
  }
  return "auto";
}

SubclusterMode subcluster_from(const std::string& s) {
  if (s == "auto") return SubclusterMode::Auto;
  if (s == "on") return SubclusterMode::On;
  if (s == "off") return SubclusterMode::Off;
  throw Error(ErrorKind::Parse, "unknown subcluster mode '" + s + "'");
}

json config_json(const SurrogateConfig& c) {
  const auto& k = c.clustering;
  json truncation;
  if (const auto* fixed = std::get_if<FixedRank>(&c.truncation)) {
    truncation = {{"kind", "fixed"}, {"rank", fixed->rank}};
  } else {
    truncation = {{"kind", "tolerance"}, {"tol", std::get<RelativeTolerance>(c.truncation).tol}};
  }
  return {
      {"clustering",
       {{"n_min_points", k.n_min_points},
        {"n_max_clusters", k.n_max_clusters},
        {"error_threshold", k.error_threshold},
        {"pass_fraction", k.pass_fraction},
        {"n_start", k.n_start},
        {"kmeans_restarts", k.kmeans_restarts},
        {"karcher",
         {{"tol", k.karcher.tol}, {"max_iter", k.karcher.max_iter}, {"step", k.karcher.step}, {"start_index", k.karcher.start_index}}}}},
      {"truncation", truncation},
      {"gp",
       {{"l_init", c.gp.l_init},
        {"l_min", c.gp.l_min},
        {"l_max", c.gp.l_max},
        {"nugget", c.gp.nugget},
        {"max_nugget", c.gp.max_nugget},
        {"fixed_length_scale", c.gp.fixed_length_scale},
        {"standardize_inputs", c.gp.standardize_inputs}}},
      {"subcluster", subcluster_name(c.subcluster)},
      {"dbscan_eps", c.dbscan_eps},
      {"dbscan_min_pts", c.dbscan_min_pts},
      {"seed", c.seed},
  };
}

SurrogateConfig config_from(const json& j) {
  SurrogateConfig c;
  const auto& k = j.at("clustering");
  c.clustering.n_min_points = k.at("n_min_points");
  c.clustering.n_max_clusters = k.at("n_max_clusters");
  c.clustering.error_threshold = k.at("error_threshold");
  c.clustering.pass_fraction = k.at("pass_fraction");
  c.clustering.n_start = k.at("n_start");
  c.clustering.kmeans_restarts = k.at("kmeans_restarts");
  c.clustering.karcher.tol = k.at("karcher").at("tol");
  c.clustering.karcher.max_iter = k.at("karcher").at("max_iter");
  c.clustering.karcher.step = k.at("karcher").at("step");
  c.clustering.karcher.start_index = k.at("karcher").at("start_index");
  const auto& t = j.at("truncation");
  if (t.at("kind") == "fixed") {
    c.truncation = FixedRank{t.at("rank").get<Eigen::Index>()};
  } else {
    c.truncation = RelativeTolerance{t.at("tol").get<double>()};
  }
  const auto& g = j.at("gp");
  c.gp.l_init = g.at("l_init");
  c.gp.l_min = g.at("l_min");
  c.gp.l_max = g.at("l_max");
  c.gp.nugget = g.at("nugget");
  c.gp.max_nugget = g.at("max_nugget");
  c.gp.fixed_length_scale = g.at("fixed_length_scale");
  c.gp.standardize_inputs = g.at("standardize_inputs");
  c.subcluster = subcluster_from(j.at("subcluster").get<std::string>());
  c.dbscan_eps = j.at("dbscan_eps");
  c.dbscan_min_pts = j.at("dbscan_min_pts");
  c.seed = j.at("seed");
  return c;
}

json diagnostics_json(const ClusterDiagnostics& d) {
  json errors = json::array();
  for (const auto& e : d.per_point_errors) errors.push_back(doubles(e));
  json history = json::array();
  for (const auto& h : d.history) {
    history.push_back({{"n_c", h.n_c},
                       {"size_rejected", h.size_rejected},
                       {"pass_fraction", h.pass_fraction},
                       {"smallest_cluster", h.smallest_cluster},
                       {"median_error", number(h.median_error)}});
  }
  return {{"per_point_errors", errors},
          {"per_cluster_mean_error", doubles(d.per_cluster_mean_error)},
          {"cluster_sizes", d.cluster_sizes},
          {"chosen_n_c", d.chosen_n_c},
          {"pass_fraction_achieved", d.pass_fraction_achieved},
          {"converged", d.converged},
          {"history", history}};
}

ClusterDiagnostics diagnostics_from(const json& j) {
  ClusterDiagnostics d;
  for (const auto& e : j.at("per_point_errors")) d.per_point_errors.push_back(doubles_from(e));
  d.per_cluster_mean_error = doubles_from(j.at("per_cluster_mean_error"));
  d.cluster_sizes = j.at("cluster_sizes").get<std::vector<int>>();
  d.chosen_n_c = j.at("chosen_n_c");
  d.pass_fraction_achieved = j.at("pass_fraction_achieved");
  d.converged = j.at("converged");
  for (const auto& h : j.at("history")) {
    d.history.push_back({h.at("n_c").get<int>(), h.at("size_rejected").get<bool>(),
                         h.at("pass_fraction").get<double>(), h.at("smallest_cluster").get<int>(),
                         to_double(h.at("median_error"))});
  }
  return d;
}

}  // namespace

json model_to_json(const SurrogateModel& model) {
  json clusters = json::array();
  for (const auto& c : model.clusters) {
    json blocks = json::array();
    for (const auto& b : c.blocks) {
      blocks.push_back({{"gamma_u", gp_json(b.gamma_u)}, {"gamma_v", gp_json(b.gamma_v)}, {"sigma", gp_json(b.sigma)}});
    }
    clusters.push_back({{"id", c.id},
                        {"members", c.members},
                        {"rank", c.rank},
                        {"mean_u", matrix_json(c.mean_u.basis())},
                        {"mean_v", matrix_json(c.mean_v.basis())},
                        {"member_sublabels", c.member_sublabels},
                        {"blocks", blocks}});
  }
  return {{"format", "grassgp-model"},
          {"version", kFormatVersion},
          {"shape", {model.shape.rows, model.shape.cols}},
          {"config", config_json(model.config)},
          {"train_params", matrix_json(model.train_params)},
          {"labels", model.labels},
          {"sublabels", model.sublabels},
          {"diagnostics", diagnostics_json(model.diagnostics)},
          {"clusters", clusters}};
}

SurrogateModel model_from_json(const json& j) {
  try {
    if (j.at("format") != "grassgp-model" || j.at("version") != kFormatVersion) {
      throw Error(ErrorKind::Parse, "unsupported model format or version");
    }
    std::vector<ClusterModel> clusters;
    for (const auto& c : j.at("clusters")) {
      std::vector<GpBlock> blocks;
      for (const auto& b : c.at("blocks")) {
        blocks.push_back({gp_from(b.at("gamma_u")), gp_from(b.at("gamma_v")), gp_from(b.at("sigma"))});
      }
      clusters.push_back({c.at("id").get<int>(), c.at("members").get<std::vector<int>>(),
                          c.at("rank").get<Eigen::Index>(), GrassmannPoint(matrix_from(c.at("mean_u"))),
                          GrassmannPoint(matrix_from(c.at("mean_v"))),
                          c.at("member_sublabels").get<std::vector<int>>(), std::move(blocks)});
    }
    SurrogateModel model{{j.at("shape").at(0).get<Eigen::Index>(), j.at("shape").at(1).get<Eigen::Index>()},
                         matrix_from(j.at("train_params")),
                         j.at("labels").get<std::vector<int>>(),
                         j.at("sublabels").get<std::vector<int>>(),
                         std::move(clusters),
                         config_from(j.at("config")),
                         diagnostics_from(j.at("diagnostics"))};
    const auto n = static_cast<std::size_t>(model.train_params.rows());
    if (model.labels.size() != n || model.sublabels.size() != n) {
      throw Error(ErrorKind::Parse, "label arrays do not match the training set");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int l = model.labels[i];
      if (l < 0 || static_cast<std::size_t>(l) >= model.clusters.size()) {
        throw Error(ErrorKind::Parse, "label of training point " + std::to_string(i) + " names no cluster");
      }
      const int s = model.sublabels[i];
      if (s < 0 || static_cast<std::size_t>(s) >= model.clusters[static_cast<std::size_t>(l)].blocks.size()) {
        throw Error(ErrorKind::Parse, "sublabel of training point " + std::to_string(i) + " names no GP block");
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed model: ") + e.what());
  }
}

void save_model(const fs::path& path, const SurrogateModel& model) {
  write_text(path, model_to_json(model).dump() + "\n");
}

SurrogateModel load_model(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::string diagnostics_csv(const SurrogateModel& model) {
  const auto& d = model.diagnostics;
  std::string text = "cluster_id,size,epsilon_h,passed,n_sublabels\n";
  for (std::size_t h = 0; h < model.clusters.size(); ++h) {
    const double eps = h < d.per_cluster_mean_error.size() ? d.per_cluster_mean_error[h]
                                                            : std::numeric_limits<double>::quiet_NaN();
    const bool passed = eps <= model.config.clustering.error_threshold;
    text += std::to_string(h) + ',' + std::to_string(model.clusters[h].members.size()) + ',' + format_double(eps) +
            ',' + (passed ? "1" : "0") + ',' + std::to_string(model.clusters[h].blocks.size()) + '\n';
  }
  return text;
}

}  // namespace grassgp

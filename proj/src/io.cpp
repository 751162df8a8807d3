#include "sfl/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sfl/errors.hpp"

namespace sfl {

using Json = nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dataset_csv(const Dataset& data) {
  std::ostringstream out;
  out << "trajectory,start,h";
  for (int i = 1; i < data.M; ++i) out << ",zeta_" << i;
  for (const char* prefix : {"x", "clean"}) {
    for (int j = 0; j <= data.M; ++j) {
      for (int c = 0; c < data.dim; ++c) out << ',' << prefix << j << '_' << c;
    }
  }
  out << '\n';
  for (const auto& w : data.windows) {
    out << w.trajectory << ',' << w.start << ',' << format_double(w.h);
    for (double z : w.zeta) out << ',' << format_double(z);
    for (const auto* states : {&w.window_states, &w.clean_states}) {
      for (const auto& x : *states) {
        for (Eigen::Index c = 0; c < x.size(); ++c) out << ',' << format_double(x[c]);
      }
    }
    out << '\n';
  }
  return out.str();
}

Dataset parse_dataset_csv(const std::string& text) {
  std::vector<std::string> header;
  const Matrix table = parse_points_csv(text, &header);
  if (header.size() < 3 || header[0] != "trajectory" || header[1] != "start" || header[2] != "h") {
    throw ConfigError("dataset file does not start with trajectory,start,h columns");
  }
  int n_zeta = 0;
  while (3 + n_zeta < static_cast<int>(header.size()) && header[3 + n_zeta].rfind("zeta_", 0) == 0) ++n_zeta;
  const int M = n_zeta + 1;
  const int state_cols = static_cast<int>(header.size()) - 3 - n_zeta;
  if (state_cols <= 0 || state_cols % (2 * (M + 1)) != 0) throw ConfigError("dataset file has a malformed header");
  Dataset data;
  data.M = M;
  data.dim = state_cols / (2 * (M + 1));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    WindowSample w;
    w.trajectory = static_cast<int>(table(r, 0));
    w.start = static_cast<int>(table(r, 1));
    w.h = table(r, 2);
    for (int i = 0; i < n_zeta; ++i) w.zeta.push_back(table(r, 3 + i));
    Eigen::Index col = 3 + n_zeta;
    for (auto* states : {&w.window_states, &w.clean_states}) {
      for (int j = 0; j <= M; ++j) {
        states->push_back(table.row(r).segment(col, data.dim).transpose());
        col += data.dim;
      }
    }
    w.anchor_x = w.window_states.back();
    data.windows.push_back(std::move(w));
  }
  return data;
}

std::string manifest_json(const DatasetManifest& m, const std::string& config_json) {
  Json j;
  j["system"] = m.system;
  j["scheme"] = m.scheme;
  j["seed"] = m.seed;
  j["dim"] = m.dim;
  j["M"] = m.M;
  j["n_windows"] = m.n_windows;
  j["noise_sigma"] = m.noise_sigma;
  j["data_hash"] = m.data_hash;
  j["moments"] = {{"E[H]", m.mean_h}, {"E[H^(2p+2)]", m.moment_2p2}};
  j["created_utc"] = m.created_utc;
  if (!config_json.empty()) j["config"] = Json::parse(config_json);
  return j.dump(2) + "\n";
}

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index cols, const std::string& field) {
  if (!j.is_array()) throw ConfigError("model field '" + field + "' must be a list of rows");
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
      throw ConfigError("model field '" + field + "' has a row of the wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::string model_json(const KernelExpansionModel& model) {
  Json j;
  j["kind"] = "kernel_expansion";
  j["kernel"] = {{"family", "gaussian_rbf"},
                 {"lengthscales", std::vector<double>(model.kernel.lengthscales.data(),
                                                      model.kernel.lengthscales.data() +
                                                          model.kernel.lengthscales.size())}};
  j["input_kind"] = model.input_kind == InputKind::FlowInput ? "flow" : "state";
  j["include_zeta"] = model.include_zeta;
  j["window"] = model.window;
  j["input_dim"] = model.input_dim();
  j["output_dim"] = model.output_dim();
  j["centers"] = matrix_to_json(model.centers);
  j["coefficients"] = matrix_to_json(model.coefficients);
  j["provenance"] = model.provenance;
  return j.dump(1) + "\n";
}

KernelExpansionModel parse_model(const std::string& text) {
  KernelExpansionModel model;
  try {
    const Json j = Json::parse(text);
    if (j.value("kind", std::string()) != "kernel_expansion") throw ConfigError("not a kernel expansion model");
    const auto ls = j.at("kernel").at("lengthscales").get<std::vector<double>>();
    model.kernel.lengthscales = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    const std::string kind = j.at("input_kind").get<std::string>();
    if (kind != "flow" && kind != "state") throw ConfigError("unknown model input_kind '" + kind + "'");
    model.input_kind = kind == "flow" ? InputKind::FlowInput : InputKind::StateInput;
    model.include_zeta = j.at("include_zeta").get<bool>();
    model.window = j.at("window").get<int>();
    const auto in_dim = j.at("input_dim").get<Eigen::Index>();
    const auto out_dim = j.at("output_dim").get<Eigen::Index>();
    model.centers = matrix_from_json(j.at("centers"), in_dim, "centers");
    model.coefficients = matrix_from_json(j.at("coefficients"), out_dim, "coefficients");
    model.provenance = j.value("provenance", std::string());
    model.kernel.output_dim = static_cast<int>(out_dim);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  if (model.centers.rows() != model.coefficients.rows()) {
    throw ConfigError("model centers and coefficients disagree in count");
  }
  if (model.kernel.lengthscales.size() != model.centers.cols()) {
    throw ConfigError("model lengthscales do not match the input dimension");
  }
  model.kernel.validate();
  return model;
}

Matrix parse_points_csv(const std::string& text, std::vector<std::string>* header) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> names;
  if (!std::getline(in, line)) {
    if (header) header->clear();
    return Matrix(0, 0);
  }
  {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) names.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ValidationError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
      }
    }
    if (row.size() != names.size()) {
      throw ValidationError("line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                            " values, header has " + std::to_string(names.size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  if (header) *header = names;
  return m;
}

std::string predictions_csv(const Matrix& inputs, const Matrix& outputs,
                            const std::vector<std::string>& input_names) {
  std::ostringstream out;
  for (const auto& n : input_names) out << n << ',';
  for (Eigen::Index c = 0; c < outputs.cols(); ++c) out << (c ? "," : "") << "y_" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) out << format_double(inputs(r, c)) << ',';
    for (Eigen::Index c = 0; c < outputs.cols(); ++c) out << (c ? "," : "") << format_double(outputs(r, c));
    out << '\n';
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << contents;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sfl

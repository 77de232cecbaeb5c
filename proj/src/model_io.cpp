#include "dppsd/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dppsd {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "dppsd-rbfn";
constexpr int kVersion = 1;

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

const json& field(const json& doc, const std::string& name) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw FormatError(name, "missing");
  return *it;
}

long long integer(const json& doc, const std::string& name) {
  const json& v = field(doc, name);
  if (!v.is_number_integer()) throw FormatError(name, "expected an integer");
  return v.get<long long>();
}

Eigen::VectorXd read_vector(const json& doc, const std::string& name, Eigen::Index expected) {
  const json& v = field(doc, name);
  if (!v.is_array()) throw FormatError(name, "expected an array");
  if (static_cast<Eigen::Index>(v.size()) != expected)
    throw FormatError(name, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  Eigen::VectorXd out(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    const json& e = v[static_cast<std::size_t>(i)];
    if (!e.is_number()) throw FormatError(name, "non-numeric entry at " + std::to_string(i));
    out(i) = e.get<double>();
  }
  return out;
}

Eigen::MatrixXd read_matrix(const json& doc, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  const json& m = field(doc, name);
  if (!m.is_object()) throw FormatError(name, "expected an object");
  if (integer(m, "rows") != rows) throw FormatError(name + ".rows", "expected " + std::to_string(rows));
  if (integer(m, "cols") != cols) throw FormatError(name + ".cols", "expected " + std::to_string(cols));
  const Eigen::VectorXd flat = read_vector(m, "data", rows * cols);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = flat(i * cols + j);
  return out;
}

}  // namespace

std::string model_to_json(const RbfnModel& model) {
  model.validate();
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["n_t"] = model.n_t;
  doc["constellation_size"] = model.constellation_size;
  doc["input_dim"] = model.input_dim();
  doc["hidden_dim"] = model.hidden_width();
  doc["output_dim"] = model.output_dim();
  doc["input_mean"] = vector_json(model.input_mean);
  doc["input_scale"] = vector_json(model.input_scale);
  doc["w1"] = matrix_json(model.w1);
  doc["b1"] = vector_json(model.b1);
  doc["w2"] = matrix_json(model.w2);
  doc["b2"] = vector_json(model.b2);
  return doc.dump(1);
}

RbfnModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("document", e.what());
  }
  if (!doc.is_object()) throw FormatError("document", "expected a JSON object");
  const json& format = field(doc, "format");
  if (!format.is_string() || format.get<std::string>() != kFormat) throw FormatError("format", "not an RBFN model");
  if (integer(doc, "version") != kVersion) throw FormatError("version", "unsupported version");

  RbfnModel m;
  const long long n_t = integer(doc, "n_t");
  const long long size = integer(doc, "constellation_size");
  if (n_t < 1 || n_t > 4096) throw FormatError("n_t", "out of range");
  if (size < 2 || size > 4096) throw FormatError("constellation_size", "out of range");
  m.n_t = static_cast<int>(n_t);
  m.constellation_size = static_cast<int>(size);
  if (integer(doc, "input_dim") != m.input_dim()) throw FormatError("input_dim", "expected 2 n_t + 2");
  if (integer(doc, "hidden_dim") != m.hidden_width()) throw FormatError("hidden_dim", "expected 2 n_t + 2 |S|");
  if (integer(doc, "output_dim") != m.output_dim()) throw FormatError("output_dim", "expected |S|");

  m.input_mean = read_vector(doc, "input_mean", m.input_dim());
  m.input_scale = read_vector(doc, "input_scale", m.input_dim());
  m.w1 = read_matrix(doc, "w1", m.hidden_width(), m.input_dim());
  m.b1 = read_vector(doc, "b1", m.hidden_width());
  m.w2 = read_matrix(doc, "w2", m.output_dim(), m.hidden_width());
  m.b2 = read_vector(doc, "b2", m.output_dim());
  try {
    m.validate();
  } catch (const Error& e) {
    throw FormatError("parameters", e.what());
  }
  return m;
}

void save_model(const RbfnModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text << '\n';
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move model into '" + path.string() + "': " + ec.message());
}

RbfnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace dppsd

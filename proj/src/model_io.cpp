#include "anovakrr/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "anovakrr/error.hpp"
#include "anovakrr/random.hpp"

namespace anovakrr {

namespace {

namespace it = boost::archive::iterators;
using ToBase64 = it::base64_from_binary<it::transform_width<std::string::const_iterator, 6, 8>>;
using FromBase64 = it::transform_width<it::binary_from_base64<std::string::const_iterator>, 8, 6>;

std::string pack(const Eigen::VectorXd& v) {
  return pack_doubles(v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd unpack_vector(const nlohmann::json& j, Eigen::Index expected, const char* what) {
  const auto values = unpack_doubles(j.get<std::string>());
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw ValidationError(std::string("model: '") + what + "' holds " +
                          std::to_string(values.size()) + " values, expected " +
                          std::to_string(expected));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

}  // namespace

std::string pack_doubles(const double* data, std::size_t count) {
  std::string bytes;
  bytes.reserve(count * 8);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
  }
  std::string out(ToBase64(bytes.cbegin()), ToBase64(bytes.cend()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<double> unpack_doubles(const std::string& text) {
  if (text.size() % 4 != 0) throw ValidationError("model: base64 length is not a multiple of 4");
  const auto padding = static_cast<std::size_t>(
      std::count(text.end() - static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, text.size())),
                 text.end(), '='));
  std::string body = text.substr(0, text.size() - padding);
  if (body.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/") !=
      std::string::npos) {
    throw ValidationError("model: invalid base64 character");
  }
  std::string bytes(FromBase64(body.cbegin()), FromBase64(body.cend()));
  bytes.resize(body.size() * 6 / 8);
  if (bytes.size() % 8 != 0) throw ValidationError("model: packed array is not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 * i + b])) << (8 * b);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::json config_to_json(const KrrConfig& c) {
  return {{"sigma", c.sigma},         {"lambda", c.lambda},
          {"cg_tol", c.cg_tol},       {"cg_maxiter", c.cg_maxiter},
          {"profile", to_string(c.profile)}, {"mis_threshold", c.mis_threshold}};
}

KrrConfig config_from_json(const nlohmann::json& j) {
  KrrConfig c;
  c.sigma = j.at("sigma").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.cg_tol = j.at("cg_tol").get<double>();
  c.cg_maxiter = j.at("cg_maxiter").get<int>();
  c.profile = AccuracyProfile::parse(j.at("profile").get<std::string>()).name;
  c.mis_threshold = j.at("mis_threshold").get<double>();
  c.validate();
  return c;
}

nlohmann::json model_to_json(const KrrModel& m) {
  const auto retained = m.windows.retained();
  std::vector<int> columns = retained;
  std::sort(columns.begin(), columns.end());
  const Eigen::MatrixXd nodes = m.train_nodes(Eigen::all, columns);
  return {
      {"schema", kModelSchema},
      {"config", config_to_json(m.config)},
      {"rng", {{"name", kRngName}, {"version", kRngVersion}}},
      {"feature_names", m.feature_names},
      {"labels", {{"column", m.label_column}, {"positive", m.positive_label}}},
      {"windows", to_json(m.windows)},
      {"mis_scores", m.mis_scores},
      {"scaler", {{"means", pack(m.scaler.means)}, {"stds", pack(m.scaler.stds)}}},
      {"training",
       {{"rows", m.train_nodes.rows()},
        {"columns", columns},
        {"layout", "column-major"},
        {"nodes", pack_doubles(nodes.data(), static_cast<std::size_t>(nodes.size()))}}},
      {"alpha", pack(m.alpha)},
      {"diagnostics",
       {{"cg_iterations", m.cg_iterations},
        {"cg_residual", m.cg_residual},
        {"cg_converged", m.cg_converged}}},
  };
}

KrrModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kModelSchema) {
      throw ValidationError("model: unsupported schema '" + j.at("schema").get<std::string>() + "'");
    }
    KrrModel m;
    m.config = config_from_json(j.at("config"));
    m.windows = windows_from_json(j.at("windows"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.label_column = j.at("labels").at("column").get<std::string>();
    m.positive_label = j.at("labels").at("positive").get<std::string>();
    m.mis_scores = j.at("mis_scores").get<std::vector<double>>();
    const Eigen::Index d = m.windows.feature_count;
    m.scaler.means = unpack_vector(j.at("scaler").at("means"), d, "scaler.means");
    m.scaler.stds = unpack_vector(j.at("scaler").at("stds"), d, "scaler.stds");

    const auto& training = j.at("training");
    const auto rows = training.at("rows").get<Eigen::Index>();
    const auto columns = training.at("columns").get<std::vector<int>>();
    auto expected = m.windows.retained();
    std::sort(expected.begin(), expected.end());
    if (columns != expected) throw ValidationError("model: training columns disagree with windows");
    const auto cols = static_cast<Eigen::Index>(columns.size());
    const Eigen::VectorXd packed = unpack_vector(training.at("nodes"), rows * cols, "training.nodes");
    m.train_nodes = Eigen::MatrixXd::Zero(rows, d);
    m.train_nodes(Eigen::all, columns) = Eigen::Map<const Eigen::MatrixXd>(packed.data(), rows, cols);

    m.alpha = unpack_vector(j.at("alpha"), rows, "alpha");
    const auto& diag = j.at("diagnostics");
    m.cg_iterations = diag.at("cg_iterations").get<int>();
    m.cg_residual = diag.at("cg_residual").get<double>();
    m.cg_converged = diag.at("cg_converged").get<bool>();
    if (!m.alpha.allFinite() || !m.train_nodes.allFinite()) {
      throw ValidationError("model: non-finite values in packed arrays");
    }
    if ((m.scaler.stds.array() <= 0.0).any()) throw ValidationError("model: nonpositive scaler std");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const KrrModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw IoError("write error on '" + path.string() + "'");
}

KrrModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace anovakrr

#include "dtsurv/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dtsurv/error.hpp"

namespace dtsurv {

using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "dtsurv-hazard-model";

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::kSchema, "model file: " + what);
}

}  // namespace

std::string serialize_model(const HazardModel& m, const std::string& kind) {
  const FeatureCodec& c = m.codec;
  json j = {
      {"format", kFormat},
      {"version", kModelFormatVersion},
      {"kind", kind},
      {"codec",
       {{"numeric_columns", c.numeric_columns},
        {"means", c.means},
        {"stddevs", c.stddevs},
        {"categorical_columns", c.categorical_columns},
        {"category_levels", c.category_levels},
        {"dropped_columns", c.dropped_columns}}},
      {"coefficient_names", m.zero_hazard ? std::vector<std::string>{} : c.coefficient_names()},
      {"intercept", m.intercept},
      {"coefficients", m.coefficients},
      {"calibration", {{"a", m.calibration.a}, {"b", m.calibration.b}}},
      {"lambda", m.lambda},
      {"class_weights", {{"positive", m.weight_positive}, {"negative", m.weight_negative}}},
      {"zero_hazard", m.zero_hazard},
      {"solver",
       {{"iterations", m.iterations},
        {"gradient_norm", m.gradient_norm},
        {"calibration_folds_used", m.calibration_folds_used}}},
  };
  return j.dump(2) + "\n";
}

HazardModel deserialize_model(const std::string& text, const std::string& expected_kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) bad("unexpected format tag");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      bad("unsupported version " + std::to_string(j.at("version").get<int>()));
    }
    const auto kind = j.at("kind").get<std::string>();
    if (!expected_kind.empty() && kind != expected_kind) {
      bad("expected a " + expected_kind + " model, found " + kind);
    }
    HazardModel m;
    const json& c = j.at("codec");
    m.codec.numeric_columns = c.at("numeric_columns").get<std::vector<std::string>>();
    m.codec.means = c.at("means").get<std::vector<double>>();
    m.codec.stddevs = c.at("stddevs").get<std::vector<double>>();
    m.codec.categorical_columns = c.at("categorical_columns").get<std::vector<std::string>>();
    m.codec.category_levels = c.at("category_levels").get<std::vector<std::vector<std::string>>>();
    m.codec.dropped_columns = c.at("dropped_columns").get<std::vector<std::string>>();
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.calibration.a = j.at("calibration").at("a").get<double>();
    m.calibration.b = j.at("calibration").at("b").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.weight_positive = j.at("class_weights").at("positive").get<double>();
    m.weight_negative = j.at("class_weights").at("negative").get<double>();
    m.zero_hazard = j.at("zero_hazard").get<bool>();
    m.iterations = j.at("solver").at("iterations").get<int>();
    m.gradient_norm = j.at("solver").at("gradient_norm").get<double>();
    m.calibration_folds_used = j.at("solver").at("calibration_folds_used").get<int>();

    if (m.codec.means.size() != m.codec.numeric_columns.size() ||
        m.codec.stddevs.size() != m.codec.numeric_columns.size() ||
        m.codec.category_levels.size() != m.codec.categorical_columns.size()) {
      bad("codec arrays disagree in length");
    }
    if (!m.zero_hazard) {
      if (m.coefficients.size() != m.codec.width()) bad("coefficient count does not match the codec");
      if (j.at("coefficient_names").get<std::vector<std::string>>() != m.codec.coefficient_names()) {
        bad("coefficient names do not match the codec");
      }
    }
    return m;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

void save_model(const std::filesystem::path& path, const HazardModel& model,
                const std::string& kind) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << serialize_model(model, kind);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

HazardModel load_model(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str(), expected_kind);
}

}  // namespace dtsurv

#include "clp/param_io.hpp"

#include "clp/errors.hpp"

#include <json.hpp>

#include <string>

namespace clp {

namespace {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Matrix& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw ValidationError("parameter block shape does not match its data");
  }
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

Vector vector_from_json(const Json& j) {
  const Matrix m = matrix_from_json(j);
  if (m.cols() != 1) throw ValidationError("expected a column vector");
  return m.col(0);
}

Json header(const char* kind) {
  Json j;
  j["format"] = "clp-params";
  j["version"] = kParamFormatVersion;
  j["kind"] = kind;
  return j;
}

Json parse_document(std::string_view text, const char* kind) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(0, e.what());
  }
  if (!j.is_object() || j.value("format", "") != "clp-params") throw ValidationError("not a clp-params document");
  if (j.value("version", -1) != kParamFormatVersion) {
    throw ValidationError("unsupported clp-params version");
  }
  if (j.value("kind", "") != kind) throw ValidationError(std::string("expected a ") + kind + " document");
  return j;
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed parameter document: ") + e.what());
  }
}

}  // namespace

std::string dump_params(const ModelParams& params) {
  Json j = header("link-predictor");
  j["aggregation"] = params.aggregation == Aggregation::GcnNormalized ? "gcn" : "mean";
  j["encoder"] = Json::array();
  for (const auto& w : params.encoder) j["encoder"].push_back(matrix_to_json(w));
  j["encoder_neighbor"] = Json::array();
  for (const auto& w : params.encoder_neighbor) j["encoder_neighbor"].push_back(matrix_to_json(w));
  j["scorer_hidden"] = matrix_to_json(params.scorer_hidden);
  j["scorer_hidden_bias"] = matrix_to_json(params.scorer_hidden_bias);
  j["scorer_out"] = matrix_to_json(params.scorer_out);
  j["scorer_out_bias"] = params.scorer_out_bias;
  return j.dump(1) + "\n";
}

std::string dump_params(const QuantileModel& model) {
  Json j = header("quantile");
  j["lower_level"] = model.lower_level;
  j["upper_level"] = model.upper_level;
  j["input_mean"] = matrix_to_json(model.input_mean);
  j["input_scale"] = matrix_to_json(model.input_scale);
  j["w1"] = matrix_to_json(model.w1);
  j["b1"] = matrix_to_json(model.b1);
  j["w2"] = matrix_to_json(model.w2);
  j["b2"] = matrix_to_json(model.b2);
  j["w3"] = matrix_to_json(model.w3);
  j["b3"] = matrix_to_json(model.b3);
  return j.dump(1) + "\n";
}

ModelParams parse_model_params(std::string_view text) {
  const Json j = parse_document(text, "link-predictor");
  return guarded([&] {
    ModelParams p;
    const auto agg = j.at("aggregation").get<std::string>();
    if (agg != "gcn" && agg != "mean") throw ValidationError("unknown aggregation '" + agg + "'");
    p.aggregation = agg == "gcn" ? Aggregation::GcnNormalized : Aggregation::MeanNeighbor;
    for (const auto& w : j.at("encoder")) p.encoder.push_back(matrix_from_json(w));
    for (const auto& w : j.at("encoder_neighbor")) p.encoder_neighbor.push_back(matrix_from_json(w));
    p.scorer_hidden = matrix_from_json(j.at("scorer_hidden"));
    p.scorer_hidden_bias = vector_from_json(j.at("scorer_hidden_bias"));
    p.scorer_out = vector_from_json(j.at("scorer_out"));
    p.scorer_out_bias = j.at("scorer_out_bias").get<double>();

    if (p.encoder.empty()) throw ValidationError("encoder has no layers");
    for (std::size_t l = 1; l < p.encoder.size(); ++l) {
      if (p.encoder[l].rows() != p.encoder[l - 1].cols()) throw ValidationError("encoder layers do not chain");
    }
    const bool mean = p.aggregation == Aggregation::MeanNeighbor;
    if (p.encoder_neighbor.size() != (mean ? p.encoder.size() : 0)) {
      throw ValidationError("neighbor weights do not match the aggregation");
    }
    for (std::size_t l = 0; l < p.encoder_neighbor.size(); ++l) {
      if (p.encoder_neighbor[l].rows() != p.encoder[l].rows() || p.encoder_neighbor[l].cols() != p.encoder[l].cols()) {
        throw ValidationError("neighbor weight shape mismatch");
      }
    }
    const auto h = p.encoder.back().cols();
    if (p.scorer_hidden.rows() != h || p.scorer_hidden.cols() != h || p.scorer_hidden_bias.size() != h ||
        p.scorer_out.size() != h) {
      throw ValidationError("scorer shape mismatch");
    }
    if (!p.all_finite()) throw ValidationError("non-finite parameter");
    return p;
  });
}

QuantileModel parse_quantile_model(std::string_view text) {
  const Json j = parse_document(text, "quantile");
  return guarded([&] {
    QuantileModel m;
    m.lower_level = j.at("lower_level").get<double>();
    m.upper_level = j.at("upper_level").get<double>();
    m.input_mean = vector_from_json(j.at("input_mean"));
    m.input_scale = vector_from_json(j.at("input_scale"));
    m.w1 = matrix_from_json(j.at("w1"));
    m.b1 = vector_from_json(j.at("b1"));
    m.w2 = matrix_from_json(j.at("w2"));
    m.b2 = vector_from_json(j.at("b2"));
    m.w3 = matrix_from_json(j.at("w3"));
    m.b3 = vector_from_json(j.at("b3"));
    if (!(0.0 < m.lower_level && m.lower_level < m.upper_level && m.upper_level < 1.0)) {
      throw ValidationError("quantile levels must satisfy 0 < lower < upper < 1");
    }
    const auto d = m.w1.rows();
    const auto h = m.w1.cols();
    if (m.input_mean.size() != d || m.input_scale.size() != d || m.b1.size() != h || m.w2.rows() != h ||
        m.w2.cols() != h || m.b2.size() != h || m.w3.rows() != h || m.w3.cols() != 2 || m.b3.size() != 2) {
      throw ValidationError("quantile model shape mismatch");
    }
    if (!m.all_finite()) throw ValidationError("non-finite parameter");
    return m;
  });
}

}  // namespace clp

#pragma once

#include "clp/linkpred.hpp"
#include "clp/quantile.hpp"

#include <string>
#include <string_view>

namespace clp {

/// Versioned JSON documents: {"format": "clp-params", "version": 1, "kind": ...}.
/// Matrices are stored as {rows, cols, data} with column-major data.
inline constexpr int kParamFormatVersion = 1;

std::string dump_params(const ModelParams& params);
std::string dump_params(const QuantileModel& model);

/// Throws ParseError on malformed documents and ValidationError on a wrong
/// kind, version or shape.
ModelParams parse_model_params(std::string_view text);
QuantileModel parse_quantile_model(std::string_view text);

}  // namespace clp

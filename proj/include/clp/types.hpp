#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace clp {

using NodeId = std::uint32_t;
using Degree = std::uint32_t;

/// Per-node degrees (or only the non-isolated ones, depending on the caller).
using DegreeSequence = std::vector<Degree>;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Unordered node pair stored canonically with u < v.
struct NodePair {
  NodeId u = 0;
  NodeId v = 0;

  NodePair() = default;
  NodePair(NodeId a, NodeId b) : u(a < b ? a : b), v(a < b ? b : a) {}

  std::uint64_t key() const noexcept {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }

  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

struct LabeledEdge {
  NodePair pair;
  std::uint8_t label = 0;  // 1 = positive link, 0 = non-existent link

  friend auto operator<=>(const LabeledEdge&, const LabeledEdge&) = default;
};

using LabeledEdges = std::vector<LabeledEdge>;

/// Receives non-fatal diagnostics (directed input collapsed, empty subgraph, ...).
using WarningHandler = std::function<void(std::string_view)>;

/// Installs a new handler and returns the previous one. The default handler
/// writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace clp

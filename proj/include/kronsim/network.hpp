#pragma once

// Nodal admittance description of a pure-inductance network and its Kron
// reduction onto the source nodes.
//
// Every node row reads
//   Y_ii u_i + sum_j Y_ij u_j = sum_a (1 / L_a) e_a
// where the sum on the right runs over the sources attached to the node
// (converter filter, load branch, grid inductance). The base angular frequency
// cancels between both sides, so admittances are plain 1/L in pu^-1. The same
// real matrices act on the x and y axes independently.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kronsim/error.hpp"
#include "kronsim/xy.hpp"

namespace kronsim {

enum class SourceKind { Vsc, Load, Slack };

constexpr std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::Vsc: return "vsc";
    case SourceKind::Load: return "load";
    case SourceKind::Slack: return "slack";
  }
  return "unknown";
}

struct SourceAttachment {
  SourceKind kind = SourceKind::Vsc;
  double series_inductance = 0.0;  // Lf, L_load or Lg
  std::string device_id;
};

/// A bus. No attachments means an intermediate (zero-injection) node.
struct NodeSpec {
  std::string id;
  std::vector<SourceAttachment> attachments;

  bool is_intermediate() const { return attachments.empty(); }
};

struct BranchSpec {
  std::string from;
  std::string to;
  double inductance = 0.0;
};

struct Network {
  std::vector<NodeSpec> nodes;
  std::vector<BranchSpec> branches;
};

/// Two columns (x, y), one row per node or per attachment.
using AxisMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Structural checks shared by the assembler and the case parser. Returns
/// every problem found.
inline std::vector<Issue> validate_network(const Network& net) {
  std::vector<Issue> issues;
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const auto& node = net.nodes[k];
    if (!index.emplace(node.id, k).second) {
      issues.push_back({ErrorKind::SemanticError, "duplicate node id '" + node.id + "'"});
    }
    for (const auto& a : node.attachments) {
      if (!(a.series_inductance > 0.0) || !std::isfinite(a.series_inductance)) {
        issues.push_back({ErrorKind::NonpositiveInductance,
                          "attachment '" + a.device_id + "' at node '" + node.id +
                              "' has series inductance " + std::to_string(a.series_inductance)});
      }
    }
  }

  // Union-find over branch endpoints for the connectivity check.
  std::vector<std::size_t> parent(net.nodes.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<bool> has_branch(net.nodes.size(), false);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const auto& br = net.branches[b];
    const std::string label = "branch " + br.from + "-" + br.to;
    if (!(br.inductance > 0.0) || !std::isfinite(br.inductance)) {
      issues.push_back({ErrorKind::NonpositiveInductance,
                        label + " has inductance " + std::to_string(br.inductance)});
    }
    auto from = index.find(br.from);
    auto to = index.find(br.to);
    if (from == index.end() || to == index.end()) {
      issues.push_back({ErrorKind::UnknownNode, label + " references an undeclared node"});
      continue;
    }
    if (from->second == to->second) {
      issues.push_back({ErrorKind::InvalidBranch, label + " connects a node to itself"});
      continue;
    }
    auto key = std::minmax(from->second, to->second);
    if (!seen.emplace(key, b).second) {
      issues.push_back({ErrorKind::DuplicateBranch,
                        label + " duplicates an earlier branch between the same nodes"});
      continue;
    }
    has_branch[from->second] = has_branch[to->second] = true;
    parent[find(from->second)] = find(to->second);
  }

  std::vector<bool> island_has_source(net.nodes.size(), false);
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    if (!net.nodes[k].attachments.empty()) island_has_source[find(k)] = true;
  }
  for (std::size_t k = 0; k < net.nodes.size(); ++k) {
    const auto& node = net.nodes[k];
    if (node.attachments.empty() && !has_branch[k]) {
      issues.push_back({ErrorKind::DisconnectedNode,
                        "node '" + node.id + "' has no branches and no attachments"});
    } else if (!island_has_source[find(k)]) {
      issues.push_back({ErrorKind::DisconnectedNode,
                        "node '" + node.id + "' lies on an island without any source"});
    }
  }
  return issues;
}

/// One source attachment, located by its row in the ordered node list.
struct AttachmentRef {
  std::size_t node = 0;
  SourceKind kind = SourceKind::Vsc;
  double admittance = 0.0;  // 1 / series inductance
  std::string device_id;
};

/// The unreduced nodal system Y u = Yfr e. Rows are ordered with source nodes
/// first (declaration order) and intermediates after them.
struct FullAdmittance {
  Eigen::MatrixXd Y;
  Eigen::VectorXd yfr;  // diagonal of Yfr: summed attachment admittance per node
  std::vector<std::string> node_ids;
  std::map<std::string, std::size_t> index;
  std::size_t source_count = 0;
  std::vector<AttachmentRef> attachments;  // grouped by node, in row order

  std::size_t node_count() const { return node_ids.size(); }
  std::size_t intermediate_count() const { return node_count() - source_count; }

  Eigen::MatrixXd Yfr() const { return yfr.asDiagonal(); }

  /// n x a map from per-attachment internal voltages to nodal right-hand
  /// sides; its row sums equal yfr.
  Eigen::MatrixXd attachment_matrix() const {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(node_count(), attachments.size());
    for (std::size_t a = 0; a < attachments.size(); ++a) {
      B(attachments[a].node, a) = attachments[a].admittance;
    }
    return B;
  }

  std::span<const std::string> source_ids() const {
    return std::span(node_ids).first(source_count);
  }
  std::span<const std::string> intermediate_ids() const {
    return std::span(node_ids).subspan(source_count);
  }
};

/// Builds Y and Yfr. Throws Error with the first structural problem.
inline FullAdmittance assemble_full(const Network& net) {
  if (auto issues = validate_network(net); !issues.empty()) {
    throw Error(issues.front().code, issues.front().detail);
  }

  FullAdmittance full;
  for (const auto& node : net.nodes) {
    if (!node.is_intermediate()) full.node_ids.push_back(node.id);
  }
  full.source_count = full.node_ids.size();
  for (const auto& node : net.nodes) {
    if (node.is_intermediate()) full.node_ids.push_back(node.id);
  }
  for (std::size_t k = 0; k < full.node_ids.size(); ++k) full.index[full.node_ids[k]] = k;

  const std::size_t n = full.node_ids.size();
  full.Y = Eigen::MatrixXd::Zero(n, n);
  full.yfr = Eigen::VectorXd::Zero(n);

  for (const auto& br : net.branches) {
    const std::size_t i = full.index.at(br.from);
    const std::size_t j = full.index.at(br.to);
    const double g = 1.0 / br.inductance;
    full.Y(i, i) += g;
    full.Y(j, j) += g;
    full.Y(i, j) -= g;
    full.Y(j, i) -= g;
  }
  for (std::size_t row = 0; row < full.source_count; ++row) {
    const auto& node = *std::find_if(net.nodes.begin(), net.nodes.end(),
                                     [&](const NodeSpec& s) { return s.id == full.node_ids[row]; });
    for (const auto& a : node.attachments) {
      const double g = 1.0 / a.series_inductance;
      full.Y(row, row) += g;
      full.yfr(row) += g;
      full.attachments.push_back({row, a.kind, g, a.device_id});
    }
  }
  return full;
}

/// Source-node equivalent of the network after eliminating the intermediate
/// nodes:
///   Yr = Ya - Yb Yd^-1 Yc,   u_s = M e,   M = Yr^-1 B,
/// where B (s x a) spreads each attachment's admittance onto its node. With a
/// single attachment per source node B is the diagonal Yf.
class ReducedNetwork {
 public:
  explicit ReducedNetwork(const FullAdmittance& full)
      : node_ids_(full.node_ids),
        source_count_(full.source_count),
        attachments_(full.attachments) {
    const auto s = static_cast<Eigen::Index>(full.source_count);
    const auto m = static_cast<Eigen::Index>(full.intermediate_count());
    const Eigen::MatrixXd Ya = full.Y.topLeftCorner(s, s);
    const Eigen::MatrixXd Yb = full.Y.topRightCorner(s, m);
    const Eigen::MatrixXd Yc = full.Y.bottomLeftCorner(m, s);
    const Eigen::MatrixXd Yd = full.Y.bottomRightCorner(m, m);

    if (m == 0) {
      back_substitution_.resize(0, s);
      Yr_ = Ya;
    } else {
      Yd_lu_.compute(Yd);
      if (!Yd_lu_.isInvertible()) {
        throw Error(ErrorKind::SingularIntermediateBlock,
                    "intermediate-node block is singular (floating intermediate island)");
      }
      back_substitution_ = Yd_lu_.solve(-Yc);
      Yr_ = Ya + Yb * back_substitution_;
    }

    Yf_ = full.yfr.head(s).asDiagonal();
    B_ = full.attachment_matrix().topRows(s);

    Eigen::FullPivLU<Eigen::MatrixXd> Yr_lu(Yr_);
    if (!Yr_lu.isInvertible()) {
      throw Error(ErrorKind::SingularIntermediateBlock, "reduced admittance matrix is singular");
    }
    M_ = Yr_lu.solve(B_);
  }

  const Eigen::MatrixXd& Yr() const { return Yr_; }
  const Eigen::MatrixXd& Yf() const { return Yf_; }
  const Eigen::MatrixXd& attachment_matrix() const { return B_; }
  /// Divider matrix: source terminal voltages per unit of attachment internal
  /// voltage. Rows sum to one.
  const Eigen::MatrixXd& M() const { return M_; }
  /// -Yd^-1 Yc, maps source voltages to intermediate voltages.
  const Eigen::MatrixXd& back_substitution() const { return back_substitution_; }

  std::size_t source_count() const { return source_count_; }
  std::size_t intermediate_count() const { return node_ids_.size() - source_count_; }
  std::size_t attachment_count() const { return attachments_.size(); }
  const std::vector<AttachmentRef>& attachments() const { return attachments_; }
  std::span<const std::string> source_ids() const {
    return std::span(node_ids_).first(source_count_);
  }
  std::span<const std::string> intermediate_ids() const {
    return std::span(node_ids_).subspan(source_count_);
  }

  /// Hot path: rows of `e` are attachments, columns the x and y axes.
  AxisMatrix terminal_voltages(const AxisMatrix& e) const {
    if (e.rows() != M_.cols()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "expected " + std::to_string(M_.cols()) + " internal voltages, got " +
                      std::to_string(e.rows()));
    }
    return M_ * e;
  }

  std::vector<XY> terminal_voltages(std::span<const XY> e) const {
    return from_axes(terminal_voltages(to_axes(e)));
  }

  AxisMatrix intermediate_voltages(const AxisMatrix& u_s) const {
    if (u_s.rows() != static_cast<Eigen::Index>(source_count_)) {
      throw Error(ErrorKind::DimensionMismatch,
                  "expected " + std::to_string(source_count_) + " source voltages, got " +
                      std::to_string(u_s.rows()));
    }
    return back_substitution_ * u_s;
  }

  std::vector<XY> intermediate_voltages(std::span<const XY> u_s) const {
    return from_axes(intermediate_voltages(to_axes(u_s)));
  }

  /// Solves Yd z = rhs with the retained factorization.
  Eigen::MatrixXd solve_intermediate(const Eigen::MatrixXd& rhs) const {
    return Yd_lu_.solve(rhs);
  }

  static AxisMatrix to_axes(std::span<const XY> v) {
    AxisMatrix out(static_cast<Eigen::Index>(v.size()), 2);
    for (std::size_t k = 0; k < v.size(); ++k) {
      out(static_cast<Eigen::Index>(k), 0) = v[k].x;
      out(static_cast<Eigen::Index>(k), 1) = v[k].y;
    }
    return out;
  }

  static std::vector<XY> from_axes(const AxisMatrix& m) {
    std::vector<XY> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index k = 0; k < m.rows(); ++k) out[static_cast<std::size_t>(k)] = {m(k, 0), m(k, 1)};
    return out;
  }

 private:
  std::vector<std::string> node_ids_;
  std::size_t source_count_;
  std::vector<AttachmentRef> attachments_;
  Eigen::MatrixXd Yr_;
  Eigen::MatrixXd Yf_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd M_;
  Eigen::MatrixXd back_substitution_;
  Eigen::FullPivLU<Eigen::MatrixXd> Yd_lu_;
};

inline ReducedNetwork partition_kron(const FullAdmittance& full) { return ReducedNetwork(full); }

/// Kirchhoff boundary condition: the infinite bus supplies whatever the other
/// sources do not, so all injections sum to zero.
inline XY slack_injection(std::span<const XY> vsc_currents, std::span<const XY> load_currents) {
  XY sum;
  for (auto i : vsc_currents) sum += i;
  for (auto i : load_currents) sum += i;
  return -sum;
}

struct DaeCounts {
  std::size_t n_differential = 0;
  std::size_t n_algebraic = 0;
  friend bool operator==(const DaeCounts&, const DaeCounts&) = default;
};

inline constexpr std::size_t kVscStateDim = 6;
inline constexpr std::size_t kLoadStateDim = 2;

/// Differential states come from the devices (6 per converter, 2 per load);
/// algebraic unknowns are the x/y terminal voltages of every source node plus
/// the two components of the slack injection.
inline DaeCounts dae_counts(const Network& net) {
  DaeCounts counts;
  std::size_t source_nodes = 0;
  for (const auto& node : net.nodes) {
    if (!node.is_intermediate()) ++source_nodes;
    for (const auto& a : node.attachments) {
      if (a.kind == SourceKind::Vsc) counts.n_differential += kVscStateDim;
      if (a.kind == SourceKind::Load) counts.n_differential += kLoadStateDim;
    }
  }
  counts.n_algebraic = 2 * source_nodes + 2;
  return counts;
}

}  // namespace kronsim

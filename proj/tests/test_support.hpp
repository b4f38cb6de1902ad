#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kronsim/kronsim.hpp"

namespace kronsim::test {

inline std::string case_path(const std::string& name) {
  return std::string(KRONSIM_CASES_DIR) + "/" + name;
}

inline std::string data_path(const std::string& name) {
  return std::string(KRONSIM_TEST_DATA_DIR) + "/" + name;
}

inline NetworkCase ieee9() { return load_case(case_path("ieee9_modified.json")); }
inline NetworkCase single_vsc() { return load_case(case_path("single_vsc.json")); }
inline NetworkCase ieee9_no_load() { return load_case(case_path("ieee9_no_load.json")); }

inline NetworkCase with_feedforward(NetworkCase c, bool on) {
  for (auto& d : c.devices) {
    if (auto* v = std::get_if<VscParams>(&d.params)) v->feedforward_enabled = on;
  }
  return c;
}

/// Oracle for the network algebra: solves the unreduced nodal system
/// Y u = B e directly with a QR factorization. Shares nothing with the Schur
/// path but the assembled matrices.
inline Eigen::MatrixXd dense_full_solve(const FullAdmittance& full, const Eigen::MatrixXd& e) {
  return full.Y.colPivHouseholderQr().solve(full.attachment_matrix() * e);
}

inline Eigen::MatrixXd random_axes(std::mt19937_64& rng, Eigen::Index rows) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Eigen::MatrixXd m(rows, 2);
  for (Eigen::Index i = 0; i < rows; ++i) {
    m(i, 0) = dist(rng);
    m(i, 1) = dist(rng);
  }
  return m;
}

/// Random connected network: a spanning tree plus extra edges, with a random
/// subset of nodes carrying one or two attachments.
inline Network random_network(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> ind(0.005, 0.5);
  std::bernoulli_distribution coin(0.5);
  Network net;
  for (std::size_t k = 0; k < n; ++k) net.nodes.push_back({"n" + std::to_string(k), {}});
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  auto connect = [&](std::size_t a, std::size_t b) {
    if (a == b || adj[a][b]) return;
    adj[a][b] = adj[b][a] = true;
    net.branches.push_back({net.nodes[a].id, net.nodes[b].id, ind(rng)});
  };
  for (std::size_t k = 1; k < n; ++k) {
    connect(k, std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
  }
  for (std::size_t extra = 0; extra < n / 2; ++extra) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    connect(pick(rng), pick(rng));
  }
  std::size_t dev = 0;
  auto add = [&](std::size_t k) {
    const auto kind = static_cast<SourceKind>(dev % 3);
    net.nodes[k].attachments.push_back({kind, ind(rng), "d" + std::to_string(dev++)});
  };
  add(0);
  for (std::size_t k = 1; k < n; ++k) {
    if (coin(rng)) {
      add(k);
      if (coin(rng)) add(k);
    }
  }
  return net;
}

}  // namespace kronsim::test

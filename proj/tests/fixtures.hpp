#pragma once

#include <vector>

#include "pgbn/count_dist.hpp"
#include "pgbn/model.hpp"
#include "pgbn/rng.hpp"

namespace fixture {

// widths = (V, K_1, .., K_T); columns from Dir(eta), r from Gam(1, 1).
inline pgbn::Network random_network(const std::vector<int>& widths, pgbn::Rng& rng,
                                    double eta = 0.5) {
  pgbn::Network net;
  net.widths = widths;
  for (std::size_t t = 1; t < widths.size(); ++t) {
    Eigen::MatrixXd phi(widths[t - 1], widths[t]);
    std::vector<double> alpha(static_cast<std::size_t>(widths[t - 1]), eta);
    std::vector<double> col(alpha.size());
    for (int k = 0; k < widths[t]; ++k) {
      pgbn::sample_dirichlet_into(alpha, col, rng);
      for (int v = 0; v < widths[t - 1]; ++v) phi(v, k) = col[static_cast<std::size_t>(v)];
    }
    net.phi.push_back(phi);
  }
  net.r.resize(widths.back());
  for (int k = 0; k < widths.back(); ++k) net.r(k) = pgbn::sample_gamma(1.0, 1.0, rng);
  net.hyper.t_max = static_cast<int>(widths.size()) - 1;
  net.hyper.k1_max = widths.size() > 1 ? widths[1] : 1;
  return net;
}

// Identity layers above a V x K_1 first layer.
inline pgbn::Network identity_network(int K, int T, double r) {
  pgbn::Network net;
  net.widths.assign(static_cast<std::size_t>(T) + 1, K);
  for (int t = 0; t < T; ++t) net.phi.push_back(Eigen::MatrixXd::Identity(K, K));
  net.r = Eigen::VectorXd::Constant(K, r);
  net.hyper.t_max = T;
  net.hyper.k1_max = K;
  return net;
}

// Disjoint-support topics: term v belongs to topic v / (V / K).
inline pgbn::Network block_network(int V, int K, double r) {
  pgbn::Network net;
  net.widths = {V, K};
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(V, K);
  const int per = V / K;
  for (int v = 0; v < V; ++v) phi(v, v / per) = 1.0 / per;
  net.phi.push_back(phi);
  net.r = Eigen::VectorXd::Constant(K, r);
  net.hyper.t_max = 1;
  net.hyper.k1_max = K;
  return net;
}

}  // namespace fixture

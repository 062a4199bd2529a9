#pragma once

// Document-level bodies shared by the serial and OpenMP backends.

#include <cmath>
#include <string>
#include <vector>

#include "pgbn/count_dist.hpp"
#include "pgbn/error.hpp"
#include "pgbn/kernels.hpp"
#include "pgbn/model.hpp"

namespace pgbn::kernels::detail {

inline void check_split_dims(int rows, int cols, const Eigen::MatrixXd& phi,
                             const Eigen::MatrixXd& theta) {
  if (phi.rows() != rows || theta.rows() != phi.cols() || theta.cols() != cols) {
    fail(ErrorKind::dimension,
         "split: counts " + std::to_string(rows) + "x" + std::to_string(cols) +
             ", phi " + std::to_string(phi.rows()) + "x" +
             std::to_string(phi.cols()) + ", theta " +
             std::to_string(theta.rows()) + "x" + std::to_string(theta.cols()));
  }
}

// Splits one count x_vj over factors and adds the pieces into both
// aggregates. `w` and `piece` are scratch of length K.
inline void split_entry(Count x, int v, int j, const Eigen::MatrixXd& phi,
                        const Eigen::MatrixXd& theta, Rng& rng,
                        std::vector<double>& w, std::vector<Count>& piece,
                        CountMat& phi_counts, CountMat& m) {
  const auto K = static_cast<int>(w.size());
  for (int k = 0; k < K; ++k) w[static_cast<std::size_t>(k)] = phi(v, k) * theta(k, j);
  std::fill(piece.begin(), piece.end(), 0);
  multinomial_split_add(x, w, piece, rng);
  for (int k = 0; k < K; ++k) {
    const Count c = piece[static_cast<std::size_t>(k)];
    if (c == 0) continue;
    phi_counts(v, k) += c;
    m(k, j) += c;
  }
}

inline void split_doc_sparse(const CountMatrix& x, int j,
                             const Eigen::MatrixXd& phi,
                             const Eigen::MatrixXd& theta, Rng& rng,
                             std::vector<double>& w, std::vector<Count>& piece,
                             CountMat& phi_counts, CountMat& m) {
  const auto terms = x.terms(j);
  const auto counts = x.counts(j);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    split_entry(counts[i], terms[i], j, phi, theta, rng, w, piece, phi_counts, m);
  }
}

inline void split_doc_dense(const CountMat& x, int j, const Eigen::MatrixXd& phi,
                            const Eigen::MatrixXd& theta, Rng& rng,
                            std::vector<double>& w, std::vector<Count>& piece,
                            CountMat& phi_counts, CountMat& m) {
  for (int v = 0; v < x.rows(); ++v) {
    if (x(v, j) > 0) {
      split_entry(x(v, j), v, j, phi, theta, rng, w, piece, phi_counts, m);
    }
  }
}

inline void crt_doc(const CountMat& m, const Eigen::MatrixXd& shape, int j,
                    Rng& rng, CountMat& out) {
  for (int k = 0; k < m.rows(); ++k) {
    out(k, j) = m(k, j) > 0 ? sample_crt(m(k, j), shape(k, j), rng) : 0;
  }
}

inline void theta_doc(const Eigen::MatrixXd& shape, const CountMat& m,
                      double rate, int j, Rng& rng, Eigen::MatrixXd& theta) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    fail(ErrorKind::numeric_domain,
         "theta rate must be positive and finite, got " + std::to_string(rate) +
             " for document " + std::to_string(j));
  }
  const double scale = 1.0 / rate;
  for (int k = 0; k < shape.rows(); ++k) {
    theta(k, j) =
        sample_gamma(shape(k, j) + static_cast<double>(m(k, j)), scale, rng);
  }
}

inline double clamp_p2(double p) {
  constexpr double lo = 1e-12;
  return std::min(std::max(p, lo), 1.0 - lo);
}

inline void pc_doc(const std::vector<Count>& doc_totals,
                   const std::vector<Eigen::VectorXd>& theta_sums, double r_sum,
                   const PcParams& hp, int j, Rng& rng,
                   std::vector<Eigen::VectorXd>& c,
                   std::vector<Eigen::VectorXd>& p) {
  const int T = static_cast<int>(c.size()) - 2;
  const auto uj = static_cast<std::size_t>(j);
  const double top2 = T >= 2 ? theta_sums[2](j) : r_sum;
  const double p2 = clamp_p2(sample_beta(
      hp.a0 + static_cast<double>(doc_totals[uj]), hp.b0 + top2, rng));
  p[2](j) = p2;
  c[2](j) = (1.0 - p2) / p2;
  for (int t = 3; t <= T + 1; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    const double upper = t == T + 1 ? r_sum : theta_sums[ut](j);
    const double lower = theta_sums[ut - 1](j);
    c[ut](j) = sample_gamma(hp.e0 + upper, 1.0 / (hp.f0 + lower), rng);
    p[ut](j) = propagate_p(p[ut - 1](j), c[ut](j));
  }
}

}  // namespace pgbn::kernels::detail

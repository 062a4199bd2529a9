#include <vector>

#include "kernel_bodies.hpp"
#include "pgbn/kernels.hpp"

namespace pgbn::kernels::serial {

void split_sparse(const CountMatrix& x, const Eigen::MatrixXd& phi,
                  const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                  CountMat& phi_counts, CountMat& m) {
  detail::check_split_dims(x.rows(), x.cols(), phi, theta);
  const auto K = static_cast<std::size_t>(phi.cols());
  phi_counts = CountMat::Zero(phi.rows(), phi.cols());
  m = CountMat::Zero(phi.cols(), x.cols());
  std::vector<double> w(K);
  std::vector<Count> piece(K);
  for (int j = 0; j < x.cols(); ++j) {
    detail::split_doc_sparse(x, j, phi, theta, rngs[static_cast<std::size_t>(j)],
                             w, piece, phi_counts, m);
  }
}

void split_dense(const CountMat& x, const Eigen::MatrixXd& phi,
                 const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                 CountMat& phi_counts, CountMat& m) {
  detail::check_split_dims(static_cast<int>(x.rows()), static_cast<int>(x.cols()),
                           phi, theta);
  const auto K = static_cast<std::size_t>(phi.cols());
  phi_counts = CountMat::Zero(phi.rows(), phi.cols());
  m = CountMat::Zero(phi.cols(), x.cols());
  std::vector<double> w(K);
  std::vector<Count> piece(K);
  for (int j = 0; j < x.cols(); ++j) {
    detail::split_doc_dense(x, j, phi, theta, rngs[static_cast<std::size_t>(j)],
                            w, piece, phi_counts, m);
  }
}

void crt_uppass(const CountMat& m, const Eigen::MatrixXd& shape,
                std::vector<Rng>& rngs, CountMat& out) {
  require(shape.rows() == m.rows() && shape.cols() == m.cols(),
          ErrorKind::dimension, "crt_uppass: shape and count dimensions differ");
  out = CountMat::Zero(m.rows(), m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    detail::crt_doc(m, shape, j, rngs[static_cast<std::size_t>(j)], out);
  }
}

void sample_theta(const Eigen::MatrixXd& shape, const CountMat& m,
                  const Eigen::VectorXd& rate, std::vector<Rng>& rngs,
                  Eigen::MatrixXd& theta) {
  require(shape.rows() == m.rows() && shape.cols() == m.cols() &&
              rate.size() == m.cols(),
          ErrorKind::dimension, "sample_theta: dimension mismatch");
  theta.resize(m.rows(), m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    detail::theta_doc(shape, m, rate(j), j, rngs[static_cast<std::size_t>(j)],
                      theta);
  }
}

void update_pc(const std::vector<Count>& doc_totals,
               const std::vector<Eigen::VectorXd>& theta_sums, double r_sum,
               const PcParams& hp, std::vector<Rng>& rngs,
               std::vector<Eigen::VectorXd>& c, std::vector<Eigen::VectorXd>& p) {
  const auto J = static_cast<int>(doc_totals.size());
  for (int j = 0; j < J; ++j) {
    detail::pc_doc(doc_totals, theta_sums, r_sum, hp, j,
                   rngs[static_cast<std::size_t>(j)], c, p);
  }
}

}  // namespace pgbn::kernels::serial

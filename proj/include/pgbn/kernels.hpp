#pragma once

// Per-document kernels of the upward-downward sweep. Two backends share one
// contract: document j consumes only rngs[j], and every cross-document
// reduction is over integers, so both produce bit-identical results.

#include <Eigen/Dense>
#include <vector>

#include "pgbn/corpus.hpp"
#include "pgbn/model.hpp"
#include "pgbn/rng.hpp"

namespace pgbn::kernels {

enum class Backend { serial, openmp };

struct PcParams {
  double a0 = 0.01;
  double b0 = 0.01;
  double e0 = 1.0;
  double f0 = 1.0;
};

#define PGBN_KERNEL_DECLS                                                     \
  void split_sparse(const CountMatrix& x, const Eigen::MatrixXd& phi,         \
                    const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,     \
                    CountMat& phi_counts, CountMat& m);                       \
  void split_dense(const CountMat& x, const Eigen::MatrixXd& phi,             \
                   const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,      \
                   CountMat& phi_counts, CountMat& m);                        \
  void crt_uppass(const CountMat& m, const Eigen::MatrixXd& shape,            \
                  std::vector<Rng>& rngs, CountMat& out);                     \
  void sample_theta(const Eigen::MatrixXd& shape, const CountMat& m,          \
                    const Eigen::VectorXd& rate, std::vector<Rng>& rngs,      \
                    Eigen::MatrixXd& theta);                                  \
  void update_pc(const std::vector<Count>& doc_totals,                        \
                 const std::vector<Eigen::VectorXd>& theta_sums, double r_sum, \
                 const PcParams& hp, std::vector<Rng>& rngs,                  \
                 std::vector<Eigen::VectorXd>& c,                             \
                 std::vector<Eigen::VectorXd>& p);

// theta_sums[t] holds theta^(t)_{.j} for t = 2..T (other slots unused); the
// depth T is c.size() - 2.

namespace serial {
PGBN_KERNEL_DECLS
}  // namespace serial

namespace omp {
PGBN_KERNEL_DECLS
int workers();
void set_workers(int n);
}  // namespace omp

#undef PGBN_KERNEL_DECLS

void split_sparse(Backend b, const CountMatrix& x, const Eigen::MatrixXd& phi,
                  const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                  CountMat& phi_counts, CountMat& m);
void split_dense(Backend b, const CountMat& x, const Eigen::MatrixXd& phi,
                 const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                 CountMat& phi_counts, CountMat& m);
void crt_uppass(Backend b, const CountMat& m, const Eigen::MatrixXd& shape,
                std::vector<Rng>& rngs, CountMat& out);
void sample_theta(Backend b, const Eigen::MatrixXd& shape, const CountMat& m,
                  const Eigen::VectorXd& rate, std::vector<Rng>& rngs,
                  Eigen::MatrixXd& theta);
void update_pc(Backend b, const std::vector<Count>& doc_totals,
               const std::vector<Eigen::VectorXd>& theta_sums, double r_sum,
               const PcParams& hp, std::vector<Rng>& rngs,
               std::vector<Eigen::VectorXd>& c, std::vector<Eigen::VectorXd>& p);

}  // namespace pgbn::kernels

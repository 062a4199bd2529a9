#include <omp.h>

#include <exception>
#include <mutex>
#include <vector>

#include "kernel_bodies.hpp"
#include "pgbn/kernels.hpp"

namespace pgbn::kernels {

namespace omp {

namespace {

int g_workers = 0;  // 0: OpenMP default

int team_size() { return g_workers > 0 ? g_workers : omp_get_max_threads(); }

// Runs body(j, thread) over all documents, rethrowing the first exception
// after the parallel region.
template <typename Body>
void for_docs(int J, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel num_threads(team_size())
  {
    const int thread = omp_get_thread_num();
#pragma omp for schedule(static)
    for (int j = 0; j < J; ++j) {
      try {
        body(j, thread);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

template <typename Matrix, typename SplitDoc>
void split_with(const Matrix& x, int rows, int cols, const Eigen::MatrixXd& phi,
                const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                CountMat& phi_counts, CountMat& m, SplitDoc split_doc) {
  detail::check_split_dims(rows, cols, phi, theta);
  const auto K = static_cast<std::size_t>(phi.cols());
  const int threads = team_size();
  // m columns are disjoint per document; phi_counts needs per-thread copies,
  // summed afterwards (integer sums, so order does not matter)
  m = CountMat::Zero(phi.cols(), cols);
  std::vector<CountMat> local(static_cast<std::size_t>(threads),
                              CountMat::Zero(phi.rows(), phi.cols()));
  std::vector<std::vector<double>> w(static_cast<std::size_t>(threads),
                                     std::vector<double>(K));
  std::vector<std::vector<Count>> piece(static_cast<std::size_t>(threads),
                                        std::vector<Count>(K));
  for_docs(cols, [&](int j, int thread) {
    const auto t = static_cast<std::size_t>(thread);
    split_doc(x, j, phi, theta, rngs[static_cast<std::size_t>(j)], w[t],
              piece[t], local[t], m);
  });
  phi_counts = CountMat::Zero(phi.rows(), phi.cols());
  for (const auto& l : local) phi_counts += l;
}

}  // namespace

int workers() { return team_size(); }

void set_workers(int n) { g_workers = n > 0 ? n : 0; }

void split_sparse(const CountMatrix& x, const Eigen::MatrixXd& phi,
                  const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                  CountMat& phi_counts, CountMat& m) {
  split_with(x, x.rows(), x.cols(), phi, theta, rngs, phi_counts, m,
             detail::split_doc_sparse);
}

void split_dense(const CountMat& x, const Eigen::MatrixXd& phi,
                 const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                 CountMat& phi_counts, CountMat& m) {
  split_with(x, static_cast<int>(x.rows()), static_cast<int>(x.cols()), phi,
             theta, rngs, phi_counts, m, detail::split_doc_dense);
}

void crt_uppass(const CountMat& m, const Eigen::MatrixXd& shape,
                std::vector<Rng>& rngs, CountMat& out) {
  require(shape.rows() == m.rows() && shape.cols() == m.cols(),
          ErrorKind::dimension, "crt_uppass: shape and count dimensions differ");
  out = CountMat::Zero(m.rows(), m.cols());
  for_docs(static_cast<int>(m.cols()), [&](int j, int) {
    detail::crt_doc(m, shape, j, rngs[static_cast<std::size_t>(j)], out);
  });
}

void sample_theta(const Eigen::MatrixXd& shape, const CountMat& m,
                  const Eigen::VectorXd& rate, std::vector<Rng>& rngs,
                  Eigen::MatrixXd& theta) {
  require(shape.rows() == m.rows() && shape.cols() == m.cols() &&
              rate.size() == m.cols(),
          ErrorKind::dimension, "sample_theta: dimension mismatch");
  theta.resize(m.rows(), m.cols());
  for_docs(static_cast<int>(m.cols()), [&](int j, int) {
    detail::theta_doc(shape, m, rate(j), j, rngs[static_cast<std::size_t>(j)],
                      theta);
  });
}

void update_pc(const std::vector<Count>& doc_totals,
               const std::vector<Eigen::VectorXd>& theta_sums, double r_sum,
               const PcParams& hp, std::vector<Rng>& rngs,
               std::vector<Eigen::VectorXd>& c, std::vector<Eigen::VectorXd>& p) {
  for_docs(static_cast<int>(doc_totals.size()), [&](int j, int) {
    detail::pc_doc(doc_totals, theta_sums, r_sum, hp, j,
                   rngs[static_cast<std::size_t>(j)], c, p);
  });
}

}  // namespace omp

#define PGBN_DISPATCH(name, ...)                          \
  (b == Backend::openmp ? omp::name(__VA_ARGS__)          \
                        : serial::name(__VA_ARGS__))

void split_sparse(Backend b, const CountMatrix& x, const Eigen::MatrixXd& phi,
                  const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                  CountMat& phi_counts, CountMat& m) {
  PGBN_DISPATCH(split_sparse, x, phi, theta, rngs, phi_counts, m);
}

void split_dense(Backend b, const CountMat& x, const Eigen::MatrixXd& phi,
                 const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                 CountMat& phi_counts, CountMat& m) {
  PGBN_DISPATCH(split_dense, x, phi, theta, rngs, phi_counts, m);
}

void crt_uppass(Backend b, const CountMat& m, const Eigen::MatrixXd& shape,
                std::vector<Rng>& rngs, CountMat& out) {
  PGBN_DISPATCH(crt_uppass, m, shape, rngs, out);
}

void sample_theta(Backend b, const Eigen::MatrixXd& shape, const CountMat& m,
                  const Eigen::VectorXd& rate, std::vector<Rng>& rngs,
                  Eigen::MatrixXd& theta) {
  PGBN_DISPATCH(sample_theta, shape, m, rate, rngs, theta);
}

void update_pc(Backend b, const std::vector<Count>& doc_totals,
               const std::vector<Eigen::VectorXd>& theta_sums, double r_sum,
               const PcParams& hp, std::vector<Rng>& rngs,
               std::vector<Eigen::VectorXd>& c, std::vector<Eigen::VectorXd>& p) {
  PGBN_DISPATCH(update_pc, doc_totals, theta_sums, r_sum, hp, rngs, c, p);
}

#undef PGBN_DISPATCH

}  // namespace pgbn::kernels

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pgbn/corpus.hpp"
#include "pgbn/kernels.hpp"
#include "pgbn/model.hpp"
#include "pgbn/rng.hpp"

namespace pgbn {

using kernels::Backend;

enum class Layer1Mode { collapsed, blocked };

struct GibbsOptions {
  Layer1Mode layer1 = Layer1Mode::collapsed;
  Backend backend = Backend::serial;
  // Phi, r, gamma0 and c0 stay fixed; only per-document latents move.
  bool freeze_globals = false;
};

struct IterationReport {
  std::vector<Count> layer_totals;  // sum_j x^(t)_{.j} for t = 1..T+1
  double loglik = 0.0;              // collapsed layer-1 assignment log-likelihood
  double seconds = 0.0;
};

struct SplitResult {
  CountMat phi_counts;  // x^(t)_{v.k}
  CountMat m;           // x^(t)_{.jk}
};

SplitResult split_counts(const CountMatrix& x, const Eigen::MatrixXd& phi,
                         const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                         Backend backend = Backend::serial);
SplitResult split_counts(const CountMat& x, const Eigen::MatrixXd& phi,
                         const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                         Backend backend = Backend::serial);

// Unnormalized collapsed conditional of token i of document j, with the
// token's own assignment removed from the statistics.
std::vector<double> token_topic_weights(const TokenState& tokens,
                                        const CountMat& phi_counts,
                                        const CountMat& doc_topic,
                                        const Eigen::MatrixXd& prior_weights,
                                        double eta, int j, std::size_t i);

// One sweep over every token. phi_counts (V x K) and doc_topic (K x J) are
// the sufficient statistics and are kept in sync with tokens.topic.
// prior_weights is K x J: Phi^(2) theta^(2), or r replicated when T = 1.
void sample_token_topics(TokenState& tokens, CountMat& phi_counts,
                         CountMat& doc_topic, const Eigen::MatrixXd& prior_weights,
                         double eta, std::vector<Rng>& rngs);

CountMat crt_uppass(const CountMat& m, const Eigen::MatrixXd& shape,
                    std::vector<Rng>& rngs, Backend backend = Backend::serial);

Eigen::VectorXd sample_phi_column(const Eigen::Ref<const Eigen::VectorX<Count>>& counts,
                                  double eta, Rng& rng);
// Every column of phi ~ Dir(eta + counts column).
void sample_phi(const CountMat& counts, double eta, Rng& rng, Eigen::MatrixXd& phi);

// theta_kj ~ Gam(shape_kj + m_kj, 1 / rate_j) with rate_j = c^(t+1)_j - ln(1 - p^(t)_j).
Eigen::MatrixXd sample_theta(const Eigen::MatrixXd& shape, const CountMat& m,
                             const Eigen::VectorXd& rate, std::vector<Rng>& rngs,
                             Backend backend = Backend::serial);

Eigen::VectorXd sample_r(const CountMat& x_top, double gamma0, double c0,
                         const Eigen::VectorXd& p_top, Rng& rng);

struct Gamma0C0 {
  double gamma0 = 1.0;
  double c0 = 1.0;
};

// c0 | r first, then gamma0 by CRT augmentation with r integrated out.
Gamma0C0 sample_gamma0_c0(const Eigen::VectorXd& r,
                          const std::vector<Count>& x_top_rows,
                          const Eigen::VectorXd& p_top, double gamma0,
                          const Hyperparams& hyper, Rng& rng);

// p^(2), c^(2), then c^(t), p^(t) for t = 3..T+1.
void sample_pj_cj(LatentState& state, const Network& net,
                  Backend backend = Backend::serial);

// Gamma shape of layer t: Phi^(t+1) theta^(t+1), or r replicated at t = T.
Eigen::MatrixXd prior_shape(const Network& net, const LatentState& state, int t);

// Fresh chain on `data` for the current network: theta = 1, c = 1, layer-1
// tokens drawn in proportion to phi^(1)_{vk} times the prior shape.
LatentState init_state(const CountMatrix& data, const Network& net,
                       Layer1Mode mode, const Rng& rng);

IterationReport iteration(LatentState& state, Network& net,
                          const GibbsOptions& opt = {});

// Exact count identities across every layer; throws invariant_violation.
void check_invariants(const LatentState& state, const Network& net);

// theta^(1) ~ Gam(prior + m^(1), 1 / (c^(2) + 1)), from the per-document
// streams. Does not touch other chain state.
Eigen::MatrixXd draw_theta1(LatentState& state, const Network& net);
// Dir(eta + x_{v.k}) draw per column, from the global stream.
Eigen::MatrixXd draw_phi1(LatentState& state, const Network& net);
Eigen::MatrixXd phi1_posterior_mean(const LatentState& state, const Network& net);

std::vector<Count> layer_totals(const LatentState& state);
double assignment_loglik(const CountMat& phi_counts, double eta);

}  // namespace pgbn

#include "pgbn/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "pgbn/error.hpp"

namespace pgbn {

namespace {

void check_rng_count(const std::vector<Rng>& rngs, Eigen::Index J) {
  if (static_cast<Eigen::Index>(rngs.size()) < J) {
    fail(ErrorKind::dimension, "need one rng stream per document");
  }
}

std::size_t idx(int t) { return static_cast<std::size_t>(t); }

[[noreturn]] void broken(const std::string& what) {
  fail(ErrorKind::invariant_violation, what);
}

}  // namespace

SplitResult split_counts(const CountMatrix& x, const Eigen::MatrixXd& phi,
                         const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                         Backend backend) {
  check_rng_count(rngs, x.cols());
  SplitResult out;
  kernels::split_sparse(backend, x, phi, theta, rngs, out.phi_counts, out.m);
  return out;
}

SplitResult split_counts(const CountMat& x, const Eigen::MatrixXd& phi,
                         const Eigen::MatrixXd& theta, std::vector<Rng>& rngs,
                         Backend backend) {
  check_rng_count(rngs, x.cols());
  SplitResult out;
  kernels::split_dense(backend, x, phi, theta, rngs, out.phi_counts, out.m);
  return out;
}

std::vector<double> token_topic_weights(const TokenState& tokens,
                                        const CountMat& phi_counts,
                                        const CountMat& doc_topic,
                                        const Eigen::MatrixXd& prior_weights,
                                        double eta, int j, std::size_t i) {
  const auto K = static_cast<int>(phi_counts.cols());
  const double v_eta = static_cast<double>(phi_counts.rows()) * eta;
  const std::size_t at = tokens.doc_offset[idx(j)] + i;
  const int v = tokens.term[at];
  const int own = tokens.topic[at];
  std::vector<double> w(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const Count self = k == own ? 1 : 0;
    const double nvk = static_cast<double>(phi_counts(v, k) - self);
    const double nk = static_cast<double>(tokens.topic_totals[idx(k)] - self);
    const double ndk = static_cast<double>(doc_topic(k, j) - self);
    w[idx(k)] = (eta + nvk) / (v_eta + nk) * (ndk + prior_weights(k, j));
  }
  return w;
}

void sample_token_topics(TokenState& tokens, CountMat& phi_counts,
                         CountMat& doc_topic, const Eigen::MatrixXd& prior_weights,
                         double eta, std::vector<Rng>& rngs) {
  const auto K = static_cast<int>(phi_counts.cols());
  const auto J = static_cast<int>(doc_topic.cols());
  if (doc_topic.rows() != K || prior_weights.rows() != K || prior_weights.cols() != J ||
      static_cast<int>(tokens.doc_offset.size()) != J + 1 ||
      static_cast<int>(tokens.topic_totals.size()) != K) {
    fail(ErrorKind::dimension, "sample_token_topics: dimension mismatch");
  }
  check_rng_count(rngs, J);
  const double v_eta = static_cast<double>(phi_counts.rows()) * eta;
  std::vector<double> w(static_cast<std::size_t>(K));
  // 1 / (V eta + n_k), refreshed only for the two topics a move touches
  std::vector<double> inv_nk(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    inv_nk[idx(k)] = 1.0 / (v_eta + static_cast<double>(tokens.topic_totals[idx(k)]));
  }
  for (int j = 0; j < J; ++j) {
    Rng& rng = rngs[idx(j)];
    for (std::size_t i = tokens.doc_offset[idx(j)]; i < tokens.doc_offset[idx(j) + 1]; ++i) {
      const int v = tokens.term[i];
      const int old = tokens.topic[i];
      --phi_counts(v, old);
      --doc_topic(old, j);
      --tokens.topic_totals[idx(old)];
      inv_nk[idx(old)] =
          1.0 / (v_eta + static_cast<double>(tokens.topic_totals[idx(old)]));
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        const double wk = (eta + static_cast<double>(phi_counts(v, k))) * inv_nk[idx(k)] *
                          (static_cast<double>(doc_topic(k, j)) + prior_weights(k, j));
        w[idx(k)] = wk;
        total += wk;
      }
      if (!(total > 0.0)) {
        fail(ErrorKind::degenerate_weights,
             "token topic weights are all zero in document " + std::to_string(j));
      }
      const int k_new = static_cast<int>(sample_categorical(w, total, rng));
      tokens.topic[i] = k_new;
      ++phi_counts(v, k_new);
      ++doc_topic(k_new, j);
      ++tokens.topic_totals[idx(k_new)];
      inv_nk[idx(k_new)] =
          1.0 / (v_eta + static_cast<double>(tokens.topic_totals[idx(k_new)]));
    }
  }
}

CountMat crt_uppass(const CountMat& m, const Eigen::MatrixXd& shape,
                    std::vector<Rng>& rngs, Backend backend) {
  check_rng_count(rngs, m.cols());
  CountMat out;
  kernels::crt_uppass(backend, m, shape, rngs, out);
  return out;
}

Eigen::VectorXd sample_phi_column(const Eigen::Ref<const Eigen::VectorX<Count>>& counts,
                                  double eta, Rng& rng) {
  std::vector<double> conc(static_cast<std::size_t>(counts.size()));
  for (Eigen::Index v = 0; v < counts.size(); ++v) {
    conc[static_cast<std::size_t>(v)] = eta + static_cast<double>(counts(v));
  }
  Eigen::VectorXd out(counts.size());
  sample_dirichlet_into(conc, std::span<double>(out.data(), static_cast<std::size_t>(out.size())), rng);
  return out;
}

void sample_phi(const CountMat& counts, double eta, Rng& rng, Eigen::MatrixXd& phi) {
  phi.resize(counts.rows(), counts.cols());
  for (Eigen::Index k = 0; k < counts.cols(); ++k) {
    phi.col(k) = sample_phi_column(counts.col(k), eta, rng);
  }
}

Eigen::MatrixXd sample_theta(const Eigen::MatrixXd& shape, const CountMat& m,
                             const Eigen::VectorXd& rate, std::vector<Rng>& rngs,
                             Backend backend) {
  check_rng_count(rngs, m.cols());
  Eigen::MatrixXd theta;
  kernels::sample_theta(backend, shape, m, rate, rngs, theta);
  return theta;
}

namespace {

// -sum_j ln(1 - p_j)
double neg_log_complement_sum(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) s -= std::log1p(-p(j));
  return s;
}

}  // namespace

Eigen::VectorXd sample_r(const CountMat& x_top, double gamma0, double c0,
                         const Eigen::VectorXd& p_top, Rng& rng) {
  if (p_top.size() != x_top.cols()) {
    fail(ErrorKind::dimension, "sample_r: p has the wrong length");
  }
  const double rate = c0 + neg_log_complement_sum(p_top);
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    fail(ErrorKind::numeric_domain, "sample_r: rate must be positive, got " +
                                        std::to_string(rate));
  }
  const auto K = x_top.rows();
  Eigen::VectorXd r(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double shape = gamma0 / static_cast<double>(K) +
                         static_cast<double>(x_top.row(k).sum());
    r(k) = sample_gamma(shape, 1.0 / rate, rng);
  }
  return r;
}

Gamma0C0 sample_gamma0_c0(const Eigen::VectorXd& r,
                          const std::vector<Count>& x_top_rows,
                          const Eigen::VectorXd& p_top, double gamma0,
                          const Hyperparams& hyper, Rng& rng) {
  const auto K = static_cast<int>(r.size());
  if (K < 1 || static_cast<int>(x_top_rows.size()) != K) {
    fail(ErrorKind::dimension, "sample_gamma0_c0: dimension mismatch");
  }
  if (!(gamma0 > 0.0)) fail(ErrorKind::numeric_domain, "gamma0 must be positive");
  Gamma0C0 out;
  out.c0 = sample_gamma(hyper.e0 + gamma0, 1.0 / (hyper.f0 + r.sum()), rng);
  const double l_sum = neg_log_complement_sum(p_top);
  // -ln(1 - p~) with p~ = L / (c0 + L)
  const double neg_log_q = std::log1p(l_sum / out.c0);
  Count tables = 0;
  for (int k = 0; k < K; ++k) {
    tables += sample_crt(x_top_rows[idx(k)], gamma0 / K, rng);
  }
  const double rate = hyper.b0 + neg_log_q;
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    fail(ErrorKind::numeric_domain, "gamma0 rate must be positive");
  }
  out.gamma0 = sample_gamma(hyper.a0 + static_cast<double>(tables), 1.0 / rate, rng);
  return out;
}

void sample_pj_cj(LatentState& state, const Network& net, Backend backend) {
  const int T = net.depth();
  const int J = state.docs();
  std::vector<Count> doc_totals(idx(J));
  const CountMat& m1 = state.layers[0].m;
  for (int j = 0; j < J; ++j) doc_totals[idx(j)] = m1.col(j).sum();
  std::vector<Eigen::VectorXd> theta_sums(idx(T) + 1);
  for (int t = 2; t <= T; ++t) {
    theta_sums[idx(t)] = state.layers[idx(t - 1)].theta.colwise().sum().transpose();
  }
  kernels::PcParams hp{net.hyper.a0, net.hyper.b0, net.hyper.e0, net.hyper.f0};
  kernels::update_pc(backend, doc_totals, theta_sums, net.r.sum(), hp, state.doc_rng,
                     state.c, state.p);
}

Eigen::MatrixXd prior_shape(const Network& net, const LatentState& state, int t) {
  const int T = net.depth();
  if (t == T) return net.r.replicate(1, state.docs());
  return net.phi[idx(t)] * state.layers[idx(t)].theta;
}

LatentState init_state(const CountMatrix& data, const Network& net,
                       Layer1Mode mode, const Rng& rng) {
  net.validate();
  if (data.rows() != net.vocab_size()) {
    fail(ErrorKind::dimension, "corpus has " + std::to_string(data.rows()) +
                                   " terms, network expects " +
                                   std::to_string(net.vocab_size()));
  }
  const int T = net.depth();
  const int J = data.cols();
  LatentState s;
  s.data = data;
  s.collapsed = mode == Layer1Mode::collapsed;
  s.layers.resize(idx(T));
  for (int t = 1; t <= T; ++t) {
    LayerState& L = s.layers[idx(t - 1)];
    L.theta = Eigen::MatrixXd::Ones(net.width(t), J);
    L.phi_counts = CountMat::Zero(net.width(t - 1), net.width(t));
    L.m = CountMat::Zero(net.width(t), J);
    L.x_next = CountMat::Zero(net.width(t), J);
  }
  s.theta1_valid = !s.collapsed;
  s.c.assign(idx(T) + 2, Eigen::VectorXd());
  s.p.assign(idx(T) + 2, Eigen::VectorXd());
  s.p[1] = Eigen::VectorXd::Constant(J, kP1);
  s.c[2] = Eigen::VectorXd::Ones(J);
  s.p[2] = Eigen::VectorXd::Constant(J, 0.5);
  for (int t = 3; t <= T + 1; ++t) {
    s.c[idx(t)] = Eigen::VectorXd::Ones(J);
    s.p[idx(t)].resize(J);
    for (int j = 0; j < J; ++j) s.p[idx(t)](j) = propagate_p(s.p[idx(t - 1)](j), 1.0);
  }
  s.doc_rng.reserve(idx(J));
  for (int j = 0; j < J; ++j) s.doc_rng.push_back(rng.substream(static_cast<std::uint64_t>(j)));
  s.rng = rng.substream(std::uint64_t{1} << 62);
  s.top_history.assign(idx(net.width(T)), 0);

  const int K1 = net.width(1);
  s.tokens = expand_tokens(data, K1);
  if (s.collapsed) {
    const Eigen::MatrixXd w = prior_shape(net, s, 1);
    const Eigen::MatrixXd& phi1 = net.phi[0];
    LayerState& L1 = s.layers[0];
    std::fill(s.tokens.topic_totals.begin(), s.tokens.topic_totals.end(), 0);
    std::vector<double> weights(idx(K1));
    for (int j = 0; j < J; ++j) {
      for (std::size_t i = s.tokens.doc_offset[idx(j)]; i < s.tokens.doc_offset[idx(j) + 1]; ++i) {
        const int v = s.tokens.term[i];
        double total = 0.0;
        for (int k = 0; k < K1; ++k) {
          weights[idx(k)] = phi1(v, k) * w(k, j);
          total += weights[idx(k)];
        }
        const int k = static_cast<int>(sample_categorical(weights, total, s.doc_rng[idx(j)]));
        s.tokens.topic[i] = k;
        ++L1.phi_counts(v, k);
        ++L1.m(k, j);
        ++s.tokens.topic_totals[idx(k)];
      }
    }
  } else {
    s.tokens = TokenState{};
  }
  return s;
}

std::vector<Count> layer_totals(const LatentState& state) {
  const int T = state.depth();
  std::vector<Count> totals;
  totals.push_back(state.data.total());
  for (int t = 2; t <= T + 1; ++t) totals.push_back(state.x(t).sum());
  return totals;
}

double assignment_loglik(const CountMat& phi_counts, double eta) {
  const double V = static_cast<double>(phi_counts.rows());
  double ll = 0.0;
  for (Eigen::Index k = 0; k < phi_counts.cols(); ++k) {
    const double nk = static_cast<double>(phi_counts.col(k).sum());
    ll += std::lgamma(V * eta) - std::lgamma(V * eta + nk);
    for (Eigen::Index v = 0; v < phi_counts.rows(); ++v) {
      const Count n = phi_counts(v, k);
      if (n > 0) ll += std::lgamma(eta + static_cast<double>(n)) - std::lgamma(eta);
    }
  }
  return ll;
}

IterationReport iteration(LatentState& s, Network& net, const GibbsOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const int T = net.depth();
  const int J = s.docs();
  if (s.depth() != T) fail(ErrorKind::dimension, "state depth differs from network depth");
  const bool collapsed = opt.layer1 == Layer1Mode::collapsed;
  if (collapsed != s.collapsed) {
    fail(ErrorKind::config, "layer-1 mode differs from the mode the state was built for");
  }
  const bool sample_globals = !opt.freeze_globals;

  // upward: layer 1
  LayerState& L1 = s.layers[0];
  const Eigen::MatrixXd w1 = prior_shape(net, s, 1);
  if (collapsed) {
    sample_token_topics(s.tokens, L1.phi_counts, L1.m, w1, net.hyper.eta_at(1),
                        s.doc_rng);
  } else {
    kernels::split_sparse(opt.backend, s.data, net.phi[0], L1.theta, s.doc_rng,
                          L1.phi_counts, L1.m);
    if (sample_globals) sample_phi(L1.phi_counts, net.hyper.eta_at(1), s.rng, net.phi[0]);
  }
  kernels::crt_uppass(opt.backend, L1.m, w1, s.doc_rng, L1.x_next);

  for (int t = 2; t <= T; ++t) {
    LayerState& L = s.layers[idx(t - 1)];
    kernels::split_dense(opt.backend, s.x(t), net.phi[idx(t - 1)], L.theta, s.doc_rng,
                         L.phi_counts, L.m);
    if (sample_globals) {
      sample_phi(L.phi_counts, net.hyper.eta_at(t), s.rng, net.phi[idx(t - 1)]);
    }
    kernels::crt_uppass(opt.backend, L.m, prior_shape(net, s, t), s.doc_rng, L.x_next);
  }

  sample_pj_cj(s, net, opt.backend);

  if (sample_globals) {
    const CountMat& x_top = s.layers.back().x_next;
    std::vector<Count> rows(static_cast<std::size_t>(x_top.rows()));
    for (Eigen::Index k = 0; k < x_top.rows(); ++k) rows[static_cast<std::size_t>(k)] = x_top.row(k).sum();
    const Gamma0C0 g = sample_gamma0_c0(net.r, rows, s.p[idx(T + 1)], net.gamma0,
                                        net.hyper, s.rng);
    net.gamma0 = g.gamma0;
    net.c0 = g.c0;
    net.r = sample_r(x_top, net.gamma0, net.c0, s.p[idx(T + 1)], s.rng);
  }

  // downward
  const int bottom = collapsed ? 2 : 1;
  for (int t = T; t >= bottom; --t) {
    LayerState& L = s.layers[idx(t - 1)];
    Eigen::VectorXd rate(J);
    for (int j = 0; j < J; ++j) {
      rate(j) = t == 1 ? s.c[2](j) + 1.0
                       : s.c[idx(t + 1)](j) - std::log1p(-s.p[idx(t)](j));
    }
    kernels::sample_theta(opt.backend, prior_shape(net, s, t), L.m, rate, s.doc_rng,
                          L.theta);
  }
  s.theta1_valid = !collapsed;

  const CountMat& top_counts = s.layers.back().phi_counts;
  if (s.top_history.size() != static_cast<std::size_t>(top_counts.cols())) {
    s.top_history.assign(static_cast<std::size_t>(top_counts.cols()), 0);
  }
  for (Eigen::Index k = 0; k < top_counts.cols(); ++k) {
    s.top_history[static_cast<std::size_t>(k)] += top_counts.col(k).sum();
  }

  IterationReport rep;
  rep.layer_totals = layer_totals(s);
  rep.loglik = assignment_loglik(L1.phi_counts, net.hyper.eta_at(1));
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

void check_invariants(const LatentState& s, const Network& net) {
  const int T = net.depth();
  const int J = s.docs();
  if (s.depth() != T) broken("state depth differs from network depth");
  for (int t = 1; t <= T; ++t) {
    const LayerState& L = s.layers[idx(t - 1)];
    const std::string tag = "layer " + std::to_string(t) + ": ";
    // x^(t) column totals
    std::vector<Count> col_totals(idx(J));
    Count total = 0;
    for (int j = 0; j < J; ++j) {
      col_totals[idx(j)] = t == 1 ? s.data.doc_total(j) : s.x(t).col(j).sum();
      total += col_totals[idx(j)];
    }
    if (L.phi_counts.sum() != total) broken(tag + "phi_counts do not sum to the layer total");
    if (L.m.sum() != total) broken(tag + "m does not sum to the layer total");
    for (int j = 0; j < J; ++j) {
      if (L.m.col(j).sum() != col_totals[idx(j)]) {
        broken(tag + "m column " + std::to_string(j) + " does not match x^(t)_{.j}");
      }
    }
    if ((L.phi_counts.array() < 0).any() || (L.m.array() < 0).any()) {
      broken(tag + "negative latent count");
    }
    // row totals x^(t)_{v.}
    for (int v = 0; v < L.phi_counts.rows(); ++v) {
      Count row = 0;
      if (t == 1) {
        for (int j = 0; j < J; ++j) row += s.data.get(v, j);
      } else {
        row = s.x(t).row(v).sum();
      }
      if (L.phi_counts.row(v).sum() != row) {
        broken(tag + "phi_counts row " + std::to_string(v) + " does not match x^(t)_{v.}");
      }
    }
    for (Eigen::Index k = 0; k < L.m.rows(); ++k) {
      for (int j = 0; j < J; ++j) {
        const Count m = L.m(k, j);
        const Count x = L.x_next(k, j);
        if (x > m || x < 0 || ((m == 0) != (x == 0))) {
          broken(tag + "CRT count outside [min(m,1), m]");
        }
      }
    }
  }
  if (s.collapsed) {
    const TokenState& tk = s.tokens;
    CountMat nvk = CountMat::Zero(s.layers[0].phi_counts.rows(), s.layers[0].phi_counts.cols());
    CountMat ndk = CountMat::Zero(s.layers[0].m.rows(), J);
    for (int j = 0; j < J; ++j) {
      for (std::size_t i = tk.doc_offset[idx(j)]; i < tk.doc_offset[idx(j) + 1]; ++i) {
        ++nvk(tk.term[i], tk.topic[i]);
        ++ndk(tk.topic[i], j);
      }
    }
    if (nvk != s.layers[0].phi_counts || ndk != s.layers[0].m) {
      broken("token assignments disagree with layer-1 statistics");
    }
    for (Eigen::Index k = 0; k < nvk.cols(); ++k) {
      if (tk.topic_totals[static_cast<std::size_t>(k)] != nvk.col(k).sum()) {
        broken("topic totals disagree with token assignments");
      }
    }
  }
  for (int j = 0; j < J; ++j) {
    const double p2 = s.p[2](j);
    if (std::abs(s.c[2](j) - (1.0 - p2) / p2) > 1e-12 * std::max(1.0, s.c[2](j))) {
      broken("c^(2) is not (1 - p^(2)) / p^(2)");
    }
  }
}

Eigen::MatrixXd draw_theta1(LatentState& s, const Network& net) {
  if (s.theta1_valid) return s.layers[0].theta;
  const int J = s.docs();
  const Eigen::MatrixXd w = prior_shape(net, s, 1);
  Eigen::VectorXd rate(J);
  for (int j = 0; j < J; ++j) rate(j) = s.c[2](j) + 1.0;
  Eigen::MatrixXd theta;
  kernels::serial::sample_theta(w, s.layers[0].m, rate, s.doc_rng, theta);
  return theta;
}

Eigen::MatrixXd draw_phi1(LatentState& s, const Network& net) {
  if (!s.collapsed) return net.phi[0];
  Eigen::MatrixXd phi;
  sample_phi(s.layers[0].phi_counts, net.hyper.eta_at(1), s.rng, phi);
  return phi;
}

Eigen::MatrixXd phi1_posterior_mean(const LatentState& s, const Network& net) {
  const CountMat& n = s.layers[0].phi_counts;
  const double eta = net.hyper.eta_at(1);
  const double V = static_cast<double>(n.rows());
  Eigen::MatrixXd out(n.rows(), n.cols());
  for (Eigen::Index k = 0; k < n.cols(); ++k) {
    const double denom = V * eta + static_cast<double>(n.col(k).sum());
    for (Eigen::Index v = 0; v < n.rows(); ++v) {
      out(v, k) = (eta + static_cast<double>(n(v, k))) / denom;
    }
  }
  return out;
}

}  // namespace pgbn

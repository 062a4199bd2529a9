#include "pgbn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgbn/error.hpp"
#include "pgbn/kernels.hpp"

namespace pgbn {

namespace {

template <typename T>
T repeat_last(const std::vector<T>& v, int index) {
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(index), v.size() - 1);
  return v[i];
}

}  // namespace

double Hyperparams::eta_at(int t) const { return repeat_last(eta, t - 1); }
int Hyperparams::burn_at(int depth) const { return repeat_last(b_iters, depth - 1); }
int Hyperparams::collect_at(int depth) const {
  return repeat_last(c_iters, depth - 1);
}

void Hyperparams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (eta.empty() || !std::all_of(eta.begin(), eta.end(), positive)) {
    fail(ErrorKind::config, "eta values must be positive");
  }
  if (!positive(a0) || !positive(b0) || !positive(e0) || !positive(f0)) {
    fail(ErrorKind::config, "a0, b0, e0, f0 must be positive");
  }
  if (k1_max < 1) fail(ErrorKind::config, "k1_max must be >= 1");
  if (t_max < 1) fail(ErrorKind::config, "t_max must be >= 1");
  if (b_iters.empty() || c_iters.empty()) {
    fail(ErrorKind::config, "iteration schedules must be non-empty");
  }
  for (int b : b_iters) {
    if (b < 1) fail(ErrorKind::config, "every B_T must be >= 1");
  }
  for (int c : c_iters) {
    if (c < 0) fail(ErrorKind::config, "every C_T must be >= 0");
  }
}

std::string_view to_string(PhiKind kind) {
  return kind == PhiKind::posterior_mean ? "posterior_mean" : "last_sample";
}

void Network::validate() const {
  const int T = depth();
  if (T < 1) fail(ErrorKind::model, "network has no layers");
  if (static_cast<int>(widths.size()) != T + 1) {
    fail(ErrorKind::model, "widths list must have depth + 1 entries");
  }
  for (int w : widths) {
    if (w < 1) fail(ErrorKind::model, "every layer width must be >= 1");
  }
  for (int t = 1; t <= T; ++t) {
    const auto& ph = phi[static_cast<std::size_t>(t - 1)];
    if (ph.rows() != width(t - 1) || ph.cols() != width(t)) {
      fail(ErrorKind::model, "phi^(" + std::to_string(t) + ") is " +
                                 std::to_string(ph.rows()) + "x" +
                                 std::to_string(ph.cols()) + ", widths say " +
                                 std::to_string(width(t - 1)) + "x" +
                                 std::to_string(width(t)));
    }
    for (int k = 0; k < ph.cols(); ++k) {
      if ((ph.col(k).array() < 0.0).any() || !ph.col(k).allFinite()) {
        fail(ErrorKind::invariant_violation,
             "phi^(" + std::to_string(t) + ") column " + std::to_string(k) +
                 " has a negative or non-finite entry");
      }
      const double s = ph.col(k).sum();
      if (std::abs(s - 1.0) > 1e-10) {
        fail(ErrorKind::invariant_violation,
             "phi^(" + std::to_string(t) + ") column " + std::to_string(k) +
                 " sums to " + std::to_string(s));
      }
    }
  }
  if (r.size() != width(T)) {
    fail(ErrorKind::model, "r length differs from the top-layer width");
  }
  if (!((r.array() > 0.0).all()) || !r.allFinite()) {
    fail(ErrorKind::invariant_violation, "r must be entrywise positive");
  }
  if (!(gamma0 > 0.0) || !(c0 > 0.0)) {
    fail(ErrorKind::invariant_violation, "gamma0 and c0 must be positive");
  }
}

double propagate_p(double p_prev, double c_next) {
  if (!(p_prev >= 0.0 && p_prev < 1.0)) {
    fail(ErrorKind::numeric_domain,
         "propagate_p: p must lie in [0, 1), got " + std::to_string(p_prev));
  }
  if (!(c_next > 0.0) || !std::isfinite(c_next)) {
    fail(ErrorKind::numeric_domain,
         "propagate_p: c must be positive, got " + std::to_string(c_next));
  }
  const double l = -std::log1p(-p_prev);
  return l / (c_next + l);
}

TokenState expand_tokens(const CountMatrix& m, int topics) {
  TokenState tokens;
  tokens.doc_offset.reserve(static_cast<std::size_t>(m.cols()) + 1);
  for (int j = 0; j < m.cols(); ++j) {
    const auto t = m.terms(j);
    const auto c = m.counts(j);
    for (std::size_t i = 0; i < t.size(); ++i) {
      tokens.term.insert(tokens.term.end(), static_cast<std::size_t>(c[i]), t[i]);
    }
    tokens.doc_offset.push_back(tokens.term.size());
  }
  tokens.topic.assign(tokens.term.size(), 0);
  tokens.topic_totals.assign(static_cast<std::size_t>(topics), 0);
  if (topics > 0) tokens.topic_totals[0] = static_cast<Count>(tokens.term.size());
  return tokens;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

GeneratedCorpus generate(const Network& network, int J,
                         const std::vector<double>& c_sched, const Rng& rng) {
  network.validate();
  const int T = network.depth();
  if (J < 0) fail(ErrorKind::model, "generate: J must be >= 0");
  if (static_cast<int>(c_sched.size()) != T) {
    fail(ErrorKind::model, "generate: c schedule needs " + std::to_string(T) +
                               " values (c^(2)..c^(T+1)), got " +
                               std::to_string(c_sched.size()));
  }
  for (double c : c_sched) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      fail(ErrorKind::model, "generate: c values must be positive");
    }
  }
  const int V = network.vocab_size();
  const int K1 = network.width(1);

  GeneratedCorpus out;
  LatentState& s = out.state;
  s.layers.resize(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    s.layers[static_cast<std::size_t>(t - 1)].theta.resize(network.width(t), J);
  }
  s.c.assign(static_cast<std::size_t>(T) + 2, Eigen::VectorXd());
  s.p.assign(static_cast<std::size_t>(T) + 2, Eigen::VectorXd());
  s.p[1] = Eigen::VectorXd::Constant(J, kP1);
  for (int t = 2; t <= T + 1; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    s.c[ut] = Eigen::VectorXd::Constant(J, c_sched[ut - 2]);
    s.p[ut].resize(J);
    for (int j = 0; j < J; ++j) {
      s.p[ut](j) = t == 2 ? 1.0 / (1.0 + c_sched[0])
                          : propagate_p(s.p[ut - 1](j), c_sched[ut - 2]);
    }
  }

  // downward pass, one substream per document
  std::vector<Entry> entries;
  LayerState& L1 = s.layers[0];
  L1.m = CountMat::Zero(K1, J);
  L1.phi_counts = CountMat::Zero(V, K1);
  s.tokens.doc_offset.assign(1, 0);
  s.tokens.topic_totals.assign(static_cast<std::size_t>(K1), 0);
  for (int j = 0; j < J; ++j) {
    Rng doc = rng.substream(static_cast<std::uint64_t>(j));
    Eigen::VectorXd shape = network.r;
    for (int t = T; t >= 1; --t) {
      auto& theta = s.layers[static_cast<std::size_t>(t - 1)].theta;
      const double scale = 1.0 / c_sched[static_cast<std::size_t>(t - 1)];
      for (int k = 0; k < theta.rows(); ++k) {
        theta(k, j) = sample_gamma(shape(k), scale, doc);
      }
      if (t > 1) shape = network.phi[static_cast<std::size_t>(t - 1)] * theta.col(j);
    }
    const auto& phi1 = network.phi[0];
    for (int v = 0; v < V; ++v) {
      Count total = 0;
      for (int k = 0; k < K1; ++k) {
        const Count n = sample_poisson(phi1(v, k) * L1.theta(k, j), doc);
        if (n == 0) continue;
        total += n;
        L1.phi_counts(v, k) += n;
        L1.m(k, j) += n;
        s.tokens.topic_totals[static_cast<std::size_t>(k)] += n;
        s.tokens.term.insert(s.tokens.term.end(), static_cast<std::size_t>(n), v);
        s.tokens.topic.insert(s.tokens.topic.end(), static_cast<std::size_t>(n), k);
      }
      if (total > 0) entries.push_back({v, j, total});
    }
    s.tokens.doc_offset.push_back(s.tokens.term.size());
  }
  out.counts = CountMatrix::from_entries(V, J, std::move(entries));
  s.data = out.counts;
  s.collapsed = false;
  s.theta1_valid = true;

  // upward augmentation
  s.doc_rng.clear();
  for (int j = 0; j < J; ++j) {
    s.doc_rng.push_back(rng.substream((std::uint64_t{1} << 40) + static_cast<std::uint64_t>(j)));
  }
  s.rng = rng.substream(std::uint64_t{1} << 41);
  for (int t = 1; t <= T; ++t) {
    LayerState& L = s.layers[static_cast<std::size_t>(t - 1)];
    if (t >= 2) {
      kernels::serial::split_dense(s.x(t), network.phi[static_cast<std::size_t>(t - 1)],
                                   L.theta, s.doc_rng, L.phi_counts, L.m);
    }
    Eigen::MatrixXd shape;
    if (t == T) {
      shape = network.r.replicate(1, J);
    } else {
      shape = network.phi[static_cast<std::size_t>(t)] *
              s.layers[static_cast<std::size_t>(t)].theta;
    }
    kernels::serial::crt_uppass(L.m, shape, s.doc_rng, L.x_next);
  }
  if (T == 1) {
    s.top_history = s.tokens.topic_totals;
  } else {
    const CountMat& pc = s.layers.back().phi_counts;
    s.top_history.resize(static_cast<std::size_t>(pc.cols()));
    for (int k = 0; k < pc.cols(); ++k) s.top_history[static_cast<std::size_t>(k)] = pc.col(k).sum();
  }
  return out;
}

}  // namespace pgbn

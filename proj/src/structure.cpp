#include "pgbn/structure.hpp"

#include <algorithm>
#include <sstream>

#include "pgbn/error.hpp"

namespace pgbn {

namespace {

std::size_t idx(int t) { return static_cast<std::size_t>(t); }

int repeat_last(const std::vector<int>& v, int depth) {
  return v[std::min(idx(depth - 1), v.size() - 1)];
}

Eigen::MatrixXd prior_phi(int rows, int cols, double eta, Rng& rng) {
  Eigen::MatrixXd phi;
  sample_phi(CountMat::Zero(rows, cols), eta, rng, phi);
  return phi;
}

Eigen::VectorXd prior_r(int K, double gamma0, double c0, Rng& rng) {
  Eigen::VectorXd r(K);
  for (int k = 0; k < K; ++k) r(k) = sample_gamma(gamma0 / K, 1.0 / c0, rng);
  return r;
}

template <typename Matrix>
Matrix keep_rows(const Matrix& m, const std::vector<int>& keep) {
  Matrix out(static_cast<Eigen::Index>(keep.size()), m.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(keep[i]);
  return out;
}

template <typename Matrix>
Matrix keep_cols(const Matrix& m, const std::vector<int>& keep) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(keep[i]);
  return out;
}

}  // namespace

TrainSchedule TrainSchedule::from(const Hyperparams& hyper) {
  TrainSchedule s;
  s.burn = hyper.b_iters;
  s.collect = hyper.c_iters;
  s.k1_max = hyper.k1_max;
  s.t_max = hyper.t_max;
  return s;
}

int TrainSchedule::burn_at(int depth) const { return repeat_last(burn, depth); }
int TrainSchedule::collect_at(int depth) const { return repeat_last(collect, depth); }

void TrainSchedule::validate() const {
  if (burn.empty() || collect.empty()) fail(ErrorKind::config, "empty iteration schedule");
  for (int b : burn) {
    if (b < 1) fail(ErrorKind::config, "every B_T must be >= 1");
  }
  for (int c : collect) {
    if (c < 0) fail(ErrorKind::config, "every C_T must be >= 0");
  }
  if (k1_max < 1) fail(ErrorKind::config, "k1_max must be >= 1");
  if (t_max < 1) fail(ErrorKind::config, "t_max must be >= 1");
}

std::vector<Count> depth_criterion(const LatentState& state) {
  return layer_totals(state);
}

void add_top_layer(Network& net, LatentState& s, int width, Rng& rng) {
  const int T = net.depth();
  if (T < 1) fail(ErrorKind::structure, "add_top_layer needs an existing layer");
  if (width < 1) fail(ErrorKind::structure, "new layer width must be >= 1");
  const int J = s.docs();
  const int below = net.width(T);
  net.widths.push_back(width);
  net.phi.push_back(prior_phi(below, width, net.hyper.eta_at(T + 1), rng));
  net.r = prior_r(width, net.gamma0, net.c0, rng);

  LayerState L;
  L.theta = Eigen::MatrixXd::Ones(width, J);
  L.phi_counts = CountMat::Zero(below, width);
  L.m = CountMat::Zero(width, J);
  L.x_next = CountMat::Zero(width, J);
  s.layers.push_back(std::move(L));
  s.c.push_back(Eigen::VectorXd::Ones(J));
  Eigen::VectorXd p(J);
  for (int j = 0; j < J; ++j) p(j) = propagate_p(s.p[idx(T + 1)](j), 1.0);
  s.p.push_back(std::move(p));
  s.top_history.assign(idx(width), 0);
}

std::vector<int> prune(Network& net, LatentState& s, int layer) {
  const int T = net.depth();
  if (layer != T) fail(ErrorKind::structure, "only the top layer can be pruned");
  LayerState& L = s.layers[idx(T - 1)];
  const auto K = static_cast<int>(L.phi_counts.cols());
  std::vector<int> keep;
  for (int k = 0; k < K; ++k) {
    if (L.phi_counts.col(k).sum() > 0) keep.push_back(k);
  }
  if (keep.empty()) {
    const auto best = std::max_element(s.top_history.begin(), s.top_history.end());
    keep.push_back(best == s.top_history.end()
                       ? 0
                       : static_cast<int>(best - s.top_history.begin()));
  }
  if (static_cast<int>(keep.size()) == K) return keep;

  net.phi[idx(T - 1)] = keep_cols(net.phi[idx(T - 1)], keep);
  net.widths[idx(T)] = static_cast<int>(keep.size());
  Eigen::VectorXd r(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) r(static_cast<Eigen::Index>(i)) = net.r(keep[i]);
  net.r = r;
  L.theta = keep_rows(L.theta, keep);
  L.phi_counts = keep_cols(L.phi_counts, keep);
  L.m = keep_rows(L.m, keep);
  L.x_next = keep_rows(L.x_next, keep);
  std::vector<Count> history;
  for (int k : keep) history.push_back(s.top_history[idx(k)]);
  s.top_history = history;

  if (T == 1 && s.collapsed) {
    std::vector<int> remap(idx(K), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) remap[idx(keep[i])] = static_cast<int>(i);
    std::vector<Count> totals;
    for (int k : keep) totals.push_back(s.tokens.topic_totals[idx(k)]);
    s.tokens.topic_totals = totals;
    for (int& z : s.tokens.topic) {
      z = remap[idx(z)];
      if (z < 0) fail(ErrorKind::structure, "token assigned to a pruned factor");
    }
  }
  return keep;
}

Network export_network(const Network& net, LatentState& s, PhiKind phi1) {
  Network out = net;
  if (s.collapsed) {
    out.phi[0] = phi1 == PhiKind::posterior_mean ? phi1_posterior_mean(s, net)
                                                 : draw_phi1(s, net);
    out.phi_kind = phi1;
  } else {
    out.phi_kind = PhiKind::last_sample;
  }
  const int T = net.depth();
  out.c_median.clear();
  for (int t = 2; t <= T + 1; ++t) {
    const auto& c = s.c[idx(t)];
    out.c_median.push_back(median(std::vector<double>(c.data(), c.data() + c.size())));
  }
  out.usage.clear();
  for (int t = 1; t <= T; ++t) {
    const CountMat& pc = s.layers[idx(t - 1)].phi_counts;
    std::vector<Count> u;
    for (Eigen::Index k = 0; k < pc.cols(); ++k) u.push_back(pc.col(k).sum());
    out.usage.push_back(std::move(u));
  }
  return out;
}

std::string progress_line(int depth, int iter, int width, const IterationReport& rep) {
  std::ostringstream line;
  line << "depth=" << depth << " iter=" << iter << " K_T=" << width;
  for (std::size_t t = 0; t < rep.layer_totals.size(); ++t) {
    line << " total" << (t + 1) << '=' << rep.layer_totals[t];
  }
  return line.str();
}

TrainedStack train_layerwise(const CountMatrix& corpus, const Hyperparams& hyper,
                             const TrainSchedule& sched, const Rng& rng,
                             const TrainOptions& opt) {
  hyper.validate();
  sched.validate();
  if (corpus.cols() == 0 || corpus.rows() == 0) {
    fail(ErrorKind::structure, "training corpus is empty");
  }
  Rng init = rng.substream(0);
  Network net;
  net.hyper = hyper;
  net.hyper.k1_max = sched.k1_max;
  net.hyper.t_max = sched.t_max;
  net.hyper.b_iters = sched.burn;
  net.hyper.c_iters = sched.collect;
  net.gamma0 = 1.0;
  net.c0 = 1.0;
  net.widths = {corpus.rows(), sched.k1_max};
  net.phi.push_back(prior_phi(corpus.rows(), sched.k1_max, hyper.eta_at(1), init));
  net.r = prior_r(sched.k1_max, net.gamma0, net.c0, init);
  LatentState state = init_state(corpus, net, opt.gibbs.layer1, rng.substream(1));

  TrainedStack stack;
  for (int T = 1; T <= sched.t_max; ++T) {
    if (T > 1) add_top_layer(net, state, net.width(T - 1), init);
    std::vector<IterationReport> reports;
    const int B = sched.burn_at(T);
    const int C = sched.collect_at(T);
    for (int iter = 1; iter <= B + C; ++iter) {
      IterationReport rep = iteration(state, net, opt.gibbs);
      if (opt.check_every_iteration) check_invariants(state, net);
      if (iter == B) {
        prune(net, state, T);
        const CountMat& x_top = state.layers.back().x_next;
        net.r = sample_r(x_top, net.gamma0, net.c0, state.p[idx(T + 1)], state.rng);
        if (opt.check_every_iteration) check_invariants(state, net);
      }
      if (opt.log && (iter % std::max(1, opt.log_every) == 0 || iter == B + C)) {
        opt.log(progress_line(T, iter, net.width(T), rep));
      }
      reports.push_back(std::move(rep));
    }
    stack.networks.push_back(export_network(net, state, opt.phi1_export));
    stack.reports.push_back(std::move(reports));
  }
  return stack;
}

}  // namespace pgbn

#include "pgbn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pgbn/error.hpp"

namespace pgbn {

namespace {

std::size_t idx(int t) { return static_cast<std::size_t>(t); }

constexpr double kProbFloor = 1e-300;

}  // namespace

PosteriorSummary extract_features(const Network& net_in, const CountMatrix& docs,
                                  int burnin, int collect, const Rng& rng,
                                  Backend backend) {
  if (burnin < 0 || collect < 1) {
    fail(ErrorKind::invalid_parameter, "features need burnin >= 0 and collect >= 1");
  }
  Network net = net_in;
  LatentState s = init_state(docs, net, Layer1Mode::blocked, rng);
  GibbsOptions opt;
  opt.layer1 = Layer1Mode::blocked;
  opt.backend = backend;
  opt.freeze_globals = true;
  const int K1 = net.width(1);
  const int J = docs.cols();
  PosteriorSummary out;
  out.theta1_mean = Eigen::MatrixXd::Zero(K1, J);
  out.feature_props = Eigen::MatrixXd::Zero(K1, J);
  for (int it = 0; it < burnin; ++it) iteration(s, net, opt);
  for (int it = 0; it < collect; ++it) {
    iteration(s, net, opt);
    const Eigen::MatrixXd& theta = s.layers[0].theta;
    out.theta1_mean += theta;
    for (int j = 0; j < J; ++j) {
      out.feature_props.col(j) += theta.col(j) / theta.col(j).sum();
    }
  }
  out.theta1_mean /= collect;
  out.feature_props /= collect;
  for (int j = 0; j < J; ++j) {
    if (docs.doc_total(j) == 0) {
      out.feature_props.col(j).setConstant(1.0 / K1);
      out.empty_docs.push_back(j);
    } else {
      // renormalize away the rounding of the running average
      out.feature_props.col(j) /= out.feature_props.col(j).sum();
    }
  }
  out.phi_mean = net.phi;
  out.sample_count = collect;
  return out;
}

PredictiveAccumulator::PredictiveAccumulator(CountMatrix heldout)
    : heldout_(std::move(heldout)) {
  offset_.assign(idx(heldout_.cols()) + 1, 0);
  for (int j = 0; j < heldout_.cols(); ++j) {
    offset_[idx(j) + 1] = offset_[idx(j)] + heldout_.terms(j).size();
  }
  numer_.assign(heldout_.nnz(), 0.0);
  denom_.assign(idx(heldout_.cols()), 0.0);
}

void PredictiveAccumulator::add(const Eigen::MatrixXd& phi1,
                                const Eigen::MatrixXd& theta1) {
  if (phi1.rows() != heldout_.rows() || theta1.cols() != heldout_.cols() ||
      phi1.cols() != theta1.rows()) {
    fail(ErrorKind::dimension, "predictive sample has the wrong shape");
  }
  for (int j = 0; j < heldout_.cols(); ++j) {
    denom_[idx(j)] += theta1.col(j).sum();
    const auto terms = heldout_.terms(j);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      numer_[offset_[idx(j)] + i] += phi1.row(terms[i]).dot(theta1.col(j));
    }
  }
  ++samples_;
}

PerplexityReport PredictiveAccumulator::report() const {
  if (samples_ == 0) fail(ErrorKind::invalid_parameter, "no predictive samples collected");
  PerplexityReport rep;
  rep.samples_used = samples_;
  rep.doc_loglik.assign(idx(heldout_.cols()), 0.0);
  double ll = 0.0;
  for (int j = 0; j < heldout_.cols(); ++j) {
    const auto counts = heldout_.counts(j);
    double doc_ll = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      double p = numer_[offset_[idx(j)] + i] / denom_[idx(j)];
      if (!(p > kProbFloor)) {
        p = kProbFloor;
        ++rep.floored;
      }
      doc_ll += static_cast<double>(counts[i]) * std::log(p);
      rep.heldout_tokens += counts[i];
    }
    rep.doc_loglik[idx(j)] = doc_ll;
    ll += doc_ll;
  }
  if (rep.heldout_tokens == 0) {
    fail(ErrorKind::invalid_parameter, "perplexity needs at least one heldout token");
  }
  rep.perplexity = std::exp(-ll / static_cast<double>(rep.heldout_tokens));
  return rep;
}

PerplexityReport heldout_perplexity(const Network& net_in, const HeldoutMask& mask,
                                    int burnin, int collect, int thin,
                                    const Rng& rng, const PerplexityOptions& opt) {
  if (burnin < 0 || collect < 1 || thin < 1) {
    fail(ErrorKind::invalid_parameter,
         "perplexity needs burnin >= 0, collect >= 1, thin >= 1");
  }
  Network net = net_in;
  GibbsOptions g;
  g.backend = opt.backend;
  if (opt.mode == PerplexityMode::frozen) {
    g.layer1 = Layer1Mode::blocked;
    g.freeze_globals = true;
  }
  LatentState s = init_state(mask.train, net, g.layer1, rng);
  PredictiveAccumulator acc(mask.heldout);
  for (int it = 0; it < burnin; ++it) iteration(s, net, g);
  for (int sample = 0; sample < collect; ++sample) {
    for (int it = 0; it < thin; ++it) iteration(s, net, g);
    const Eigen::MatrixXd phi1 = draw_phi1(s, net);
    const Eigen::MatrixXd theta1 = draw_theta1(s, net);
    acc.add(phi1, theta1);
  }
  return acc.report();
}

Eigen::VectorXd project_topic(const Network& net, int t, int k) {
  if (t < 1 || t > net.depth()) {
    fail(ErrorKind::invalid_parameter, "project_topic: layer " + std::to_string(t) +
                                           " outside 1.." + std::to_string(net.depth()));
  }
  if (k < 0 || k >= net.width(t)) {
    fail(ErrorKind::invalid_parameter, "project_topic: factor " + std::to_string(k) +
                                           " outside 0.." +
                                           std::to_string(net.width(t) - 1));
  }
  Eigen::VectorXd v = net.phi[idx(t - 1)].col(k);
  for (int l = t - 1; l >= 1; --l) v = net.phi[idx(l - 1)] * v;
  return v;
}

std::vector<int> top_indices(const Eigen::VectorXd& v, int m) {
  std::vector<int> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), 0);
  const auto n = std::clamp<std::ptrdiff_t>(m, 0, static_cast<std::ptrdiff_t>(order.size()));
  std::partial_sort(order.begin(), order.begin() + n, order.end(), [&](int a, int b) {
    return v(a) != v(b) ? v(a) > v(b) : a < b;
  });
  order.resize(static_cast<std::size_t>(n));
  return order;
}

std::vector<TopicRow> topic_rows(const Network& net, int top_n) {
  std::vector<TopicRow> rows;
  for (int t = 1; t <= net.depth(); ++t) {
    const int K = net.width(t);
    std::vector<Count> usage(idx(K), 0);
    if (net.usage.size() >= idx(t) && net.usage[idx(t - 1)].size() == idx(K)) {
      usage = net.usage[idx(t - 1)];
    }
    std::vector<int> order(idx(K));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return usage[idx(a)] > usage[idx(b)]; });
    for (int rank = 0; rank < K; ++rank) {
      const int k = order[idx(rank)];
      TopicRow row;
      row.layer = t;
      row.factor = k;
      row.rank = rank;
      row.usage = usage[idx(k)];
      const Eigen::VectorXd proj = project_topic(net, t, k);
      row.top_terms = top_indices(proj, top_n);
      for (int v : row.top_terms) row.top_probs.push_back(proj(v));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SyntheticDoc> generate_documents(const Network& net,
                                             std::vector<double> c_sched,
                                             int n_docs, int top_m,
                                             const Rng& rng, bool draw_counts) {
  net.validate();
  const int T = net.depth();
  if (c_sched.empty()) c_sched = net.c_median;
  if (static_cast<int>(c_sched.size()) != T) {
    fail(ErrorKind::invalid_parameter,
         "generate_documents: need " + std::to_string(T) +
             " c values (the network carries none, pass them explicitly)");
  }
  for (double c : c_sched) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      fail(ErrorKind::invalid_parameter, "generate_documents: c values must be positive");
    }
  }
  if (n_docs < 0) fail(ErrorKind::invalid_parameter, "n_docs must be >= 0");
  std::vector<SyntheticDoc> docs;
  docs.reserve(idx(n_docs));
  for (int j = 0; j < n_docs; ++j) {
    Rng doc_rng = rng.substream(static_cast<std::uint64_t>(j));
    Eigen::VectorXd shape = net.r;
    Eigen::VectorXd theta;
    for (int t = T; t >= 1; --t) {
      const double scale = 1.0 / c_sched[idx(t - 1)];
      theta.resize(shape.size());
      for (Eigen::Index k = 0; k < shape.size(); ++k) {
        theta(k) = sample_gamma(shape(k), scale, doc_rng);
      }
      if (t > 1) shape = net.phi[idx(t - 1)] * theta;
    }
    SyntheticDoc doc;
    doc.rate = net.phi[0] * theta;
    doc.top_terms = top_indices(doc.rate, top_m);
    if (draw_counts) {
      doc.counts.resize(static_cast<std::size_t>(doc.rate.size()));
      for (Eigen::Index v = 0; v < doc.rate.size(); ++v) {
        doc.counts[static_cast<std::size_t>(v)] = sample_poisson(doc.rate(v), doc_rng);
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

VmrResult vmr_diagnostic(int T, double p2, double r, long long n_draws, const Rng& rng) {
  if (T < 1) fail(ErrorKind::invalid_parameter, "vmr_diagnostic: T must be >= 1");
  if (!(p2 > 0.0 && p2 < 1.0)) {
    fail(ErrorKind::invalid_parameter, "vmr_diagnostic: p2 must lie in (0, 1)");
  }
  if (!(r > 0.0)) fail(ErrorKind::invalid_parameter, "vmr_diagnostic: r must be positive");
  if (n_draws < 2) fail(ErrorKind::invalid_parameter, "vmr_diagnostic: need >= 2 draws");
  Rng g = rng;
  const double odds = p2 / (1.0 - p2);
  // Welford running moments
  double mean = 0.0;
  double m2 = 0.0;
  for (long long n = 1; n <= n_draws; ++n) {
    double shape = r;
    for (int t = T; t >= 2; --t) shape = sample_gamma(shape, 1.0, g);
    const double theta1 = sample_gamma(shape, odds, g);
    const auto m = static_cast<double>(sample_poisson(theta1, g));
    const double delta = m - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (m - mean);
  }
  VmrResult out;
  out.mean = mean;
  out.vmr = m2 / static_cast<double>(n_draws - 1) / mean;
  return out;
}

double vmr_closed_form(int T, double p2) {
  return (1.0 + (T - 1) * p2) / (1.0 - p2);
}

}  // namespace pgbn

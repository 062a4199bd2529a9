#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "pgbn/corpus.hpp"
#include "pgbn/count_dist.hpp"
#include "pgbn/rng.hpp"

namespace pgbn {

using CountMat = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic>;

// p^(1) = 1 - e^-1, so -ln(1 - p^(1)) = 1.
inline const double kP1 = 1.0 - std::exp(-1.0);

struct Hyperparams {
  std::vector<double> eta{0.05};  // eta^(t); the last value repeats upward
  double a0 = 0.01;
  double b0 = 0.01;
  double e0 = 1.0;
  double f0 = 1.0;
  int k1_max = 50;
  int t_max = 1;
  std::vector<int> b_iters{1000};  // B_T per depth, last value repeats
  std::vector<int> c_iters{1000};  // C_T per depth, last value repeats

  double eta_at(int t) const;
  int burn_at(int depth) const;
  int collect_at(int depth) const;
  void validate() const;

  bool operator==(const Hyperparams&) const = default;
};

enum class PhiKind { last_sample, posterior_mean };

std::string_view to_string(PhiKind kind);

struct Network {
  std::vector<int> widths;             // K_0 .. K_T
  std::vector<Eigen::MatrixXd> phi;    // phi[t-1] is K_{t-1} x K_t
  Eigen::VectorXd r;                   // length K_T
  double gamma0 = 1.0;
  double c0 = 1.0;
  Hyperparams hyper;
  std::vector<double> c_median;        // median c^(t) over documents, t = 2..T+1
  std::vector<std::vector<Count>> usage;  // x^(t)_{..k} per layer
  PhiKind phi_kind = PhiKind::last_sample;

  int depth() const { return static_cast<int>(phi.size()); }
  int width(int t) const { return widths[static_cast<std::size_t>(t)]; }
  int vocab_size() const { return widths.empty() ? 0 : widths.front(); }

  // Checks shapes (model error) and column stochasticity within 1e-10
  // (invariant_violation).
  void validate() const;
};

struct LayerState {
  Eigen::MatrixXd theta;  // K_t x J
  CountMat phi_counts;    // K_{t-1} x K_t, x^(t)_{v.k}
  CountMat m;             // K_t x J, m^(t)(t+1)_{kj} = x^(t)_{.jk}
  CountMat x_next;        // K_t x J, x^(t+1)
};

// Layer-1 tokens grouped by document; topic is 0-based.
struct TokenState {
  std::vector<std::size_t> doc_offset{0};
  std::vector<int> term;
  std::vector<int> topic;
  std::vector<Count> topic_totals;  // x^(1)_{..k}

  std::size_t size() const { return term.size(); }
};

struct LatentState {
  CountMatrix data;                // x^(1)
  std::vector<LayerState> layers;  // layer t at index t-1
  // Per-document scalars indexed by layer number; c is valid for t = 2..T+1
  // and p for t = 1..T+1.
  std::vector<Eigen::VectorXd> c;
  std::vector<Eigen::VectorXd> p;
  TokenState tokens;
  bool collapsed = true;       // layer 1 theta and phi integrated out
  bool theta1_valid = false;   // layers[0].theta holds a current draw
  std::vector<Count> top_history;  // accumulated x^(T)_{..k}
  std::vector<Rng> doc_rng;
  Rng rng;

  int depth() const { return static_cast<int>(layers.size()); }
  int docs() const { return data.cols(); }
  // x^(t) for t >= 2.
  const CountMat& x(int t) const { return layers[static_cast<std::size_t>(t - 2)].x_next; }
};

struct PosteriorSummary {
  Eigen::MatrixXd theta1_mean;    // K_1 x J
  Eigen::MatrixXd feature_props;  // K_1 x J, columns on the simplex
  std::vector<Eigen::MatrixXd> phi_mean;
  int sample_count = 0;
  std::vector<int> empty_docs;    // received the uniform feature vector
};

struct GeneratedCorpus {
  CountMatrix counts;
  LatentState state;
};

// Draws J documents top-down. c_sched holds c^(t) for t = 2..T+1 (shared by
// every document); p^(2) follows from c^(2). The returned state carries a
// complete augmented configuration (theta at every layer, layer-1 tokens,
// splits and CRT counts upward), with c and p filled in.
GeneratedCorpus generate(const Network& network, int J,
                         const std::vector<double>& c_sched, const Rng& rng);

// p^(t+1) = -ln(1 - p^(t)) / (c^(t+1) - ln(1 - p^(t))).
double propagate_p(double p_prev, double c_next);

// Tokens expanded from counts, topics all zero.
TokenState expand_tokens(const CountMatrix& m, int topics);

double median(std::vector<double> values);

}  // namespace pgbn

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pgbn/corpus.hpp"
#include "pgbn/gibbs.hpp"
#include "pgbn/model.hpp"
#include "pgbn/rng.hpp"

namespace pgbn {

// Frozen-network chain: Phi, r, gamma0, c0 stay fixed and layer 1 runs
// blocked, so every update is per document. Empty documents get 1/K_1.
PosteriorSummary extract_features(const Network& net, const CountMatrix& docs,
                                  int burnin, int collect, const Rng& rng,
                                  Backend backend = Backend::serial);

struct PerplexityReport {
  double perplexity = 0.0;
  int samples_used = 0;
  std::vector<double> doc_loglik;  // sum_v y_vj ln p_vj
  Count heldout_tokens = 0;
  Count floored = 0;               // heldout entries whose probability hit 1e-300
};

// p_vj = sum_s (Phi^(1,s) theta^(1,s))_vj / sum_s theta^(1,s)_.j, evaluated at
// heldout entries only; perplexity = exp(-sum y ln p / sum y).
class PredictiveAccumulator {
 public:
  explicit PredictiveAccumulator(CountMatrix heldout);

  void add(const Eigen::MatrixXd& phi1, const Eigen::MatrixXd& theta1);
  PerplexityReport report() const;
  int samples() const { return samples_; }

 private:
  CountMatrix heldout_;
  std::vector<std::size_t> offset_;  // first entry of each document
  std::vector<double> numer_;        // one slot per heldout entry
  std::vector<double> denom_;        // per document
  int samples_ = 0;
};

enum class PerplexityMode { resample, frozen };

struct PerplexityOptions {
  PerplexityMode mode = PerplexityMode::resample;
  Backend backend = Backend::serial;
};

// Runs burnin + collect * thin iterations on mask.train and keeps one
// (Phi^(1), theta^(1)) draw every `thin` iterations after burn-in.
PerplexityReport heldout_perplexity(const Network& net, const HeldoutMask& mask,
                                    int burnin, int collect, int thin,
                                    const Rng& rng,
                                    const PerplexityOptions& opt = {});

// (Phi^(1) ... Phi^(t-1)) phi^(t)_k; t is 1-based, k 0-based.
Eigen::VectorXd project_topic(const Network& net, int t, int k);

// Indices of the m largest entries, descending, ties to the lower index.
std::vector<int> top_indices(const Eigen::VectorXd& v, int m);

struct TopicRow {
  int layer = 1;
  int factor = 0;
  int rank = 0;        // by usage within the layer, 0 = most used
  Count usage = 0;
  std::vector<int> top_terms;
  std::vector<double> top_probs;
};

std::vector<TopicRow> topic_rows(const Network& net, int top_n);

struct SyntheticDoc {
  Eigen::VectorXd rate;   // Phi^(1) theta^(1)
  std::vector<int> top_terms;
  std::vector<Count> counts;  // empty unless drawn
};

// c_sched holds c^(t) for t = 2..T+1; when empty, the network's c medians.
std::vector<SyntheticDoc> generate_documents(const Network& net,
                                             std::vector<double> c_sched,
                                             int n_docs, int top_m,
                                             const Rng& rng,
                                             bool draw_counts = true);

struct VmrResult {
  double mean = 0.0;
  double vmr = 0.0;
};

// Identity-Phi chain with c^(t) = 1 for t >= 3: theta^(T) ~ Gam(r, 1), ...,
// theta^(1) ~ Gam(theta^(2), p2 / (1 - p2)), m ~ Pois(theta^(1)).
VmrResult vmr_diagnostic(int T, double p2, double r, long long n_draws,
                         const Rng& rng);

// (1 + (T - 1) p) / (1 - p)
double vmr_closed_form(int T, double p2);

}  // namespace pgbn

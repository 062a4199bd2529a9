#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pgbn/corpus.hpp"
#include "pgbn/gibbs.hpp"
#include "pgbn/model.hpp"

namespace pgbn {

struct TrainSchedule {
  std::vector<int> burn{1000};     // B_T, last value repeats
  std::vector<int> collect{1000};  // C_T, last value repeats
  int k1_max = 50;
  int t_max = 1;

  static TrainSchedule from(const Hyperparams& hyper);
  int burn_at(int depth) const;
  int collect_at(int depth) const;
  void validate() const;
};

struct TrainedStack {
  std::vector<Network> networks;  // depths 1..t_max
  std::vector<std::vector<IterationReport>> reports;
};

struct TrainOptions {
  GibbsOptions gibbs;
  PhiKind phi1_export = PhiKind::last_sample;
  // Receives "depth=T iter=i K_T=k total1=.. total2=.." lines.
  std::function<void(const std::string&)> log;
  int log_every = 1;
  // Runs the exact count checks after every iteration.
  bool check_every_iteration = false;
};

TrainedStack train_layerwise(const CountMatrix& corpus, const Hyperparams& hyper,
                             const TrainSchedule& sched, const Rng& rng,
                             const TrainOptions& opt = {});

// Removes the factors of `layer` (which must be the top layer) whose count
// x^(layer)_{..k} is zero. If every factor is inactive, the one with the
// largest accumulated count survives. Returns the kept indices.
std::vector<int> prune(Network& net, LatentState& state, int layer);

// sum_j x^(t)_{.j} for t = 1..T+1.
std::vector<Count> depth_criterion(const LatentState& state);

// Puts a new top layer of width K on the network and chain: phi columns from
// Dir(eta), theta = 1, r ~ Gam(gamma0 / K, 1 / c0), c = 1.
void add_top_layer(Network& net, LatentState& state, int width, Rng& rng);

// Copy of the chain's network for export, with phi^(1) replaced by a draw or
// the posterior mean in collapsed mode, c medians and usage filled in.
Network export_network(const Network& net, LatentState& state, PhiKind phi1);

std::string progress_line(int depth, int iter, int width, const IterationReport& rep);

}  // namespace pgbn

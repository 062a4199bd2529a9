#include <benchmark/benchmark.h>

#include "pgbn/gibbs.hpp"
#include "pgbn/kernels.hpp"
#include "pgbn/model.hpp"

using namespace pgbn;

namespace {

constexpr int kDocs = 400;

Network make_network(const std::vector<int>& widths, Rng& rng) {
  Network net;
  net.widths = widths;
  for (std::size_t t = 1; t < widths.size(); ++t) {
    Eigen::MatrixXd phi(widths[t - 1], widths[t]);
    const std::vector<double> conc(static_cast<std::size_t>(widths[t - 1]), 0.1);
    for (int k = 0; k < widths[t]; ++k) {
      const auto col = sample_dirichlet(conc, rng);
      for (int v = 0; v < widths[t - 1]; ++v) phi(v, k) = col[static_cast<std::size_t>(v)];
    }
    net.phi.push_back(phi);
  }
  net.r = Eigen::VectorXd::Constant(widths.back(), 1.0);
  net.hyper.t_max = static_cast<int>(widths.size()) - 1;
  return net;
}

struct Setup {
  Network net;
  GeneratedCorpus g;
  std::vector<Rng> rngs;

  Setup() {
    Rng rng(1);
    net = make_network({2000, 100, 40}, rng);
    g = generate(net, kDocs, {0.1, 1.0}, Rng(2));
    for (int j = 0; j < kDocs; ++j) rngs.push_back(Rng(3, static_cast<std::uint64_t>(j)));
  }
};

Setup& setup() {
  static Setup s;
  return s;
}

Backend backend_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Backend::serial : Backend::openmp;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "openmp");
}

void BM_split_sparse(benchmark::State& state) {
  Setup& s = setup();
  CountMat phi_counts;
  CountMat m;
  for (auto _ : state) {
    kernels::split_sparse(backend_of(state), s.g.counts, s.net.phi[0],
                          s.g.state.layers[0].theta, s.rngs, phi_counts, m);
    benchmark::DoNotOptimize(m.data());
  }
  label(state);
}

void BM_split_dense(benchmark::State& state) {
  Setup& s = setup();
  CountMat phi_counts;
  CountMat m;
  for (auto _ : state) {
    kernels::split_dense(backend_of(state), s.g.state.x(2), s.net.phi[1],
                         s.g.state.layers[1].theta, s.rngs, phi_counts, m);
    benchmark::DoNotOptimize(m.data());
  }
  label(state);
}

void BM_crt_uppass(benchmark::State& state) {
  Setup& s = setup();
  const Eigen::MatrixXd shape = s.net.phi[1] * s.g.state.layers[1].theta;
  CountMat out;
  for (auto _ : state) {
    kernels::crt_uppass(backend_of(state), s.g.state.layers[0].m, shape, s.rngs, out);
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void BM_sample_theta(benchmark::State& state) {
  Setup& s = setup();
  const Eigen::MatrixXd shape = s.net.phi[1] * s.g.state.layers[1].theta;
  const Eigen::VectorXd rate = Eigen::VectorXd::Constant(kDocs, 1.5);
  Eigen::MatrixXd theta;
  for (auto _ : state) {
    kernels::sample_theta(backend_of(state), shape, s.g.state.layers[0].m, rate, s.rngs,
                          theta);
    benchmark::DoNotOptimize(theta.data());
  }
  label(state);
}

void BM_blocked_iteration(benchmark::State& state) {
  Setup& s = setup();
  Network net = s.net;
  LatentState chain = init_state(s.g.counts, net, Layer1Mode::blocked, Rng(4));
  GibbsOptions opt;
  opt.layer1 = Layer1Mode::blocked;
  opt.backend = backend_of(state);
  for (auto _ : state) iteration(chain, net, opt);
  label(state);
}

}  // namespace

BENCHMARK(BM_split_sparse)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_split_dense)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_crt_uppass)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_theta)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_blocked_iteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

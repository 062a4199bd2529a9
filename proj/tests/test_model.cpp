#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pgbn/error.hpp"
#include "pgbn/gibbs.hpp"
#include "pgbn/model.hpp"
#include "pgbn/network_io.hpp"

using namespace pgbn;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::io;
}

std::string to_text(const Network& net, const std::vector<std::string>& cfg = {}) {
  std::ostringstream out;
  write_network(out, net, cfg);
  return out.str();
}

Network from_text(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return read_network(in, warnings);
}

}  // namespace

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  CHECK_NOTHROW(h.validate());
  CHECK(h.eta_at(3) == 0.05);
  h.eta = {0.1, 0.2};
  CHECK(h.eta_at(1) == 0.1);
  CHECK(h.eta_at(5) == 0.2);
  h.b_iters = {10, 20};
  CHECK(h.burn_at(1) == 10);
  CHECK(h.burn_at(4) == 20);
  Hyperparams bad = h;
  bad.a0 = 0.0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::config);
  bad = h;
  bad.t_max = 0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::config);
  bad = h;
  bad.k1_max = 0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::config);
}

TEST_CASE("network validation") {
  Rng rng(1);
  Network net = fixture::random_network({6, 4, 3}, rng);
  CHECK_NOTHROW(net.validate());
  Network wrong = net;
  wrong.phi[1] = Eigen::MatrixXd::Constant(4, 2, 0.25);
  CHECK(kind_of([&] { wrong.validate(); }) == ErrorKind::model);
  wrong = net;
  wrong.phi[0].col(1) *= 0.9;
  CHECK(kind_of([&] { wrong.validate(); }) == ErrorKind::invariant_violation);
  wrong = net;
  wrong.r(0) = 0.0;
  CHECK(kind_of([&] { wrong.validate(); }) == ErrorKind::invariant_violation);
  wrong = net;
  wrong.widths[1] = 0;
  CHECK(kind_of([&] { wrong.validate(); }) == ErrorKind::model);
}

TEST_CASE("propagate_p") {
  CHECK(propagate_p(0.5, 1.0) == doctest::Approx(std::log(2.0) / (1.0 + std::log(2.0))));
  // p^(1) gives -ln(1 - p) = 1
  CHECK(propagate_p(kP1, 3.0) == doctest::Approx(0.25));
  CHECK(kind_of([] { propagate_p(1.0, 1.0); }) == ErrorKind::numeric_domain);
  CHECK(kind_of([] { propagate_p(0.5, 0.0); }) == ErrorKind::numeric_domain);
}

TEST_CASE("generate T=1 identity gives NB(1, 0.5) counts") {
  const Network net = fixture::identity_network(2, 1, 1.0);
  const GeneratedCorpus g = generate(net, 100000, {1.0}, Rng(2));
  std::vector<double> xs;
  std::vector<long long> hist(30, 0);
  for (int j = 0; j < g.counts.cols(); ++j) {
    for (int v = 0; v < 2; ++v) {
      const Count x = g.counts.get(v, j);
      xs.push_back(static_cast<double>(x));
      ++hist[static_cast<std::size_t>(std::min<Count>(x, 29))];
    }
  }
  CHECK(oracle::moments(xs).mean == doctest::Approx(1.0).epsilon(0.01));
  std::vector<double> probs;
  for (int n = 0; n < 30; ++n) probs.push_back(oracle::nb_pmf(n, 1.0, 0.5));
  CHECK(oracle::chi_square(probs, hist, static_cast<long long>(xs.size())).p_value > 1e-3);
}

TEST_CASE("generate layer means follow the gamma mean identity") {
  Rng rng(3);
  const Network net = fixture::random_network({8, 5, 4, 3}, rng);
  const std::vector<double> c{1.5, 2.0, 0.7};
  const int J = 20000;
  const GeneratedCorpus g = generate(net, J, c, Rng(4));
  const int T = 3;
  for (int t = T; t >= 1; --t) {
    const Eigen::MatrixXd& theta = g.state.layers[static_cast<std::size_t>(t - 1)].theta;
    Eigen::MatrixXd expect;
    if (t == T) {
      expect = net.r.replicate(1, J) / c[static_cast<std::size_t>(t - 1)];
    } else {
      expect = net.phi[static_cast<std::size_t>(t)] *
               g.state.layers[static_cast<std::size_t>(t)].theta /
               c[static_cast<std::size_t>(t - 1)];
    }
    const Eigen::MatrixXd resid = theta - expect;
    for (Eigen::Index k = 0; k < resid.rows(); ++k) {
      const double mean = resid.row(k).mean();
      const double sd = std::sqrt((resid.row(k).array() - mean).square().sum() / (J - 1));
      CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(J)));
    }
  }
  for (int j = 0; j < J; ++j) {
    CHECK(g.state.p[1](j) == doctest::Approx(kP1));
    CHECK(g.state.p[2](j) == doctest::Approx(1.0 / (1.0 + c[0])));
  }
}

TEST_CASE("generate returns a consistent augmented state") {
  Rng rng(5);
  const Network net = fixture::random_network({12, 6, 4}, rng);
  const GeneratedCorpus g = generate(net, 50, {1.0, 1.0}, Rng(6));
  CHECK(g.counts == g.state.data);
  CHECK_NOTHROW(check_invariants(g.state, net));
  CHECK(static_cast<Count>(g.state.tokens.size()) == g.counts.total());
  const GeneratedCorpus again = generate(net, 50, {1.0, 1.0}, Rng(6));
  CHECK(again.counts == g.counts);
  CHECK(again.state.layers[1].theta == g.state.layers[1].theta);
  CHECK(kind_of([&] { generate(net, 5, {1.0}, Rng(6)); }) == ErrorKind::model);
}

TEST_CASE("generate with identity upper layers reproduces the VMR inflation") {
  // T = 3, c^(t) = 1, so p^(2) = 0.5: VMR = (1 + 2 * 0.5) / 0.5 = 4
  const Network net = fixture::identity_network(1, 3, 1.0);
  const int J = 1000000;
  const GeneratedCorpus g = generate(net, J, {1.0, 1.0, 1.0}, Rng(7));
  double s = 0.0;
  double s2 = 0.0;
  for (int j = 0; j < J; ++j) {
    const auto x = static_cast<double>(g.counts.doc_total(j));
    s += x;
    s2 += x * x;
  }
  const double mean = s / J;
  const double var = (s2 - J * mean * mean) / (J - 1);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(var / mean == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("expand_tokens and median") {
  const CountMatrix m = CountMatrix::from_entries(3, 2, {{0, 0, 2}, {2, 0, 1}, {1, 1, 3}});
  const TokenState tok = expand_tokens(m, 4);
  CHECK(tok.size() == 6);
  CHECK(tok.doc_offset == std::vector<std::size_t>{0, 3, 6});
  CHECK(tok.term == std::vector<int>{0, 0, 2, 1, 1, 1});
  CHECK(tok.topic_totals == std::vector<Count>{6, 0, 0, 0});
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("network round-trip is exact") {
  Rng rng(8);
  Network net = fixture::random_network({7, 5, 3, 2}, rng);
  net.gamma0 = 1.0 / 3.0;
  net.c0 = std::exp(1.0);
  net.hyper.eta = {0.05, 0.1};
  net.hyper.b_iters = {5, 6, 7};
  net.c_median = {0.1, 1e-17, 12345.678};
  net.usage = {{1, 2, 3, 4, 5}, {0, 9, 1}, {7, 7}};
  net.phi_kind = PhiKind::posterior_mean;
  const std::string text = to_text(net, {"seed=1"});
  const Network back = from_text(text);
  CHECK(back.widths == net.widths);
  for (std::size_t t = 0; t < net.phi.size(); ++t) CHECK(back.phi[t] == net.phi[t]);
  CHECK(back.r == net.r);
  CHECK(back.gamma0 == net.gamma0);
  CHECK(back.c0 == net.c0);
  CHECK(back.hyper == net.hyper);
  CHECK(back.c_median == net.c_median);
  CHECK(back.usage == net.usage);
  CHECK(back.phi_kind == PhiKind::posterior_mean);
  CHECK(to_text(back, {"seed=1"}) == text);
  CHECK(text.find("# config: seed=1") != std::string::npos);
}

TEST_CASE("network load failures") {
  Network net;
  net.widths = {2, 1};
  net.phi = {Eigen::MatrixXd::Constant(2, 1, 0.5)};
  net.r = Eigen::VectorXd::Ones(1);
  const std::string text = to_text(net);

  std::string bad = text;
  const auto pos = bad.find("0.5 0.5");
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, 7, "0.5 0.4");
  CHECK(kind_of([&] { from_text(bad); }) == ErrorKind::invariant_violation);

  bad = text;
  bad.replace(0, bad.find('\n'), "pgbn-network 2");
  CHECK(kind_of([&] { from_text(bad); }) == ErrorKind::serialization);

  CHECK(kind_of([&] { from_text(text.substr(0, text.size() / 2)); }) ==
        ErrorKind::serialization);

  bad = text;
  bad.replace(bad.find("phi 1 2 1"), 9, "phi 1 3 1");
  CHECK(kind_of([&] { from_text(bad); }) == ErrorKind::serialization);

  bad = text;
  bad.insert(bad.rfind("end"), "future_field 1 2 3\n");
  std::vector<std::string> warnings;
  CHECK_NOTHROW(from_text(bad, &warnings));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("future_field") != std::string::npos);
}

TEST_CASE("format_real round-trips") {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform(), static_cast<int>(rng.below(200)) - 100);
    CHECK(std::stod(format_real(v)) == v);
  }
}

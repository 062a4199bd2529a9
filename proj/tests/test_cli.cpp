#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fixtures.hpp"
#include "pgbn/cli.hpp"
#include "pgbn/corpus.hpp"
#include "pgbn/network_io.hpp"

using namespace pgbn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pgbn");
  std::ostringstream out;
  std::ostringstream err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Run r;
  r.code = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "pgbn_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    Rng rng(1);
    const Network net = fixture::random_network({30, 5, 3}, rng, 0.3);
    save_bow(d / "toy.bow", generate(net, 40, {0.3, 1.0}, Rng(2)).counts);
    Vocabulary v;
    for (int i = 0; i < 30; ++i) v.terms.push_back("w" + std::to_string(i));
    save_vocab(d / "toy.vocab", v);
    return d;
  }();
  return dir;
}

std::vector<std::string> train_args(const fs::path& out) {
  const fs::path d = workdir();
  return {"train", "--corpus", (d / "toy.bow").string(), "--out-dir", out.string(),
          "--k1max", "10", "--tmax", "3", "--seed", "7", "--burn", "15", "--collect",
          "5", "--workers", "2"};
}

}  // namespace

TEST_CASE("train writes one network per depth and a log") {
  const fs::path d = workdir();
  const Run r = run(train_args(d / "a"));
  REQUIRE(r.code == 0);
  for (int t = 1; t <= 3; ++t) {
    CHECK(fs::exists(d / "a" / ("network_T" + std::to_string(t) + ".pgbn")));
  }
  const std::string log = slurp(d / "a" / "train.log");
  CHECK(log.find("# config: seed=7") != std::string::npos);
  CHECK(log.find("depth=3 iter=20 K_T=") != std::string::npos);
  const std::string net = slurp(d / "a" / "network_T2.pgbn");
  CHECK(net.rfind("pgbn-network 1\n# config: command=train", 0) == 0);
  CHECK(net.find("k1max=10") != std::string::npos);
}

TEST_CASE("identical train runs give byte-identical files") {
  const fs::path d = workdir();
  REQUIRE(run(train_args(d / "b1")).code == 0);
  REQUIRE(run(train_args(d / "b2")).code == 0);
  for (int t = 1; t <= 3; ++t) {
    const std::string name = "network_T" + std::to_string(t) + ".pgbn";
    CHECK(slurp(d / "b1" / name) == slurp(d / "b2" / name));
  }
  CHECK(slurp(d / "b1" / "train.log") == slurp(d / "b2" / "train.log"));
}

TEST_CASE("eval on a uniform model reports V") {
  const fs::path d = workdir();
  Network uni;
  uni.widths = {30, 2};
  uni.phi = {Eigen::MatrixXd::Constant(30, 2, 1.0 / 30)};
  uni.r = Eigen::VectorXd::Ones(2);
  save_network(d / "uniform.pgbn", uni);
  const Run r = run({"eval", "--model", (d / "uniform.pgbn").string(), "--corpus",
                     (d / "toy.bow").string(), "--mode", "frozen", "--burn", "3",
                     "--collect", "2", "--thin", "1", "--report",
                     (d / "report.tsv").string()});
  REQUIRE(r.code == 0);
  const auto pos = r.out.find("perplexity=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(r.out.substr(pos + 11)) == doctest::Approx(30.0).epsilon(1e-12));
  const std::string rep = slurp(d / "report.tsv");
  CHECK(rep.find("# config: command=eval") != std::string::npos);
  CHECK(rep.find("# config: mode=frozen") != std::string::npos);
}

TEST_CASE("features, topics, generate and diagnose artifacts") {
  const fs::path d = workdir();
  REQUIRE(run(train_args(d / "c")).code == 0);
  const std::string model = (d / "c" / "network_T2.pgbn").string();
  REQUIRE(run({"features", "--model", model, "--corpus", (d / "toy.bow").string(), "--burn",
               "3", "--collect", "3", "--out", (d / "f.tsv").string()})
              .code == 0);
  const std::string f = slurp(d / "f.tsv");
  CHECK(f.find("# config: command=features") != std::string::npos);
  CHECK(f.find("doc\tempty\tf1") != std::string::npos);

  REQUIRE(run({"topics", "--model", model, "--vocab", (d / "toy.vocab").string(), "--top",
               "5", "--out", (d / "t.tsv").string()})
              .code == 0);
  const std::string t = slurp(d / "t.tsv");
  CHECK(t.find("rank\tlayer\tfactor\tusage\ttop_words") != std::string::npos);
  CHECK(t.find("\tw") != std::string::npos);

  REQUIRE(run({"generate", "--model", model, "--n-docs", "4", "--top", "3", "--out",
               (d / "g.tsv").string(), "--counts-out", (d / "g.bow").string()})
              .code == 0);
  CHECK(slurp(d / "g.tsv").find("# config: c=median") != std::string::npos);
  CHECK(load_bow(d / "g.bow").counts.cols() == 4);

  const Run diag = run({"diagnose", "--draws", "20000", "--selftest-draws", "20000",
                        "--out", (d / "diag.tsv").string()});
  CHECK(diag.out.find("selftest\tcrt n=8 r=2") != std::string::npos);
  CHECK(slurp(d / "diag.tsv") == diag.out);
}

TEST_CASE("failures print a machine-parsable error line") {
  const fs::path d = workdir();
  Run r = run({"train"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: code=config message=", 0) == 0);
  r = run({"eval", "--model", (d / "missing.pgbn").string(), "--corpus",
           (d / "toy.bow").string()});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: code=io message=", 0) == 0);
  std::ofstream(d / "broken.bow") << "2\n2\n1\n1 3 1\n";
  r = run({"train", "--corpus", (d / "broken.bow").string(), "--out-dir",
           (d / "x").string()});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: code=parse message=line 4", 0) == 0);
  r = run({"train", "--corpus", (d / "toy.bow").string(), "--backend", "gpu"});
  CHECK(r.err.rfind("error: code=config", 0) == 0);
  r = run({"train", "--corpus", (d / "toy.bow").string(), "--a0", "-1", "--out-dir",
           (d / "y").string()});
  CHECK(r.err.rfind("error: code=config", 0) == 0);
  CHECK(run({"--help"}).code == 0);
}

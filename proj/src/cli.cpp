#include "pgbn/cli.hpp"

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pgbn/corpus.hpp"
#include "pgbn/error.hpp"
#include "pgbn/eval.hpp"
#include "pgbn/gibbs.hpp"
#include "pgbn/kernels.hpp"
#include "pgbn/model.hpp"
#include "pgbn/network_io.hpp"
#include "pgbn/structure.hpp"

namespace pgbn {

namespace {

namespace fs = std::filesystem;

struct Common {
  unsigned long long seed = kDefaultSeed;
  int workers = 0;
  std::string backend = "openmp";
};

struct TrainArgs {
  std::string corpus, vocab, out_dir = ".";
  std::vector<double> eta{0.05};
  double a0 = 0.01, b0 = 0.01, e0 = 1.0, f0 = 1.0;
  int k1max = 50, tmax = 1;
  std::vector<int> burn{1000}, collect{1000};
  std::string layer1 = "collapsed", phi1 = "last_sample";
  bool check = false;
};

struct EvalArgs {
  std::string model, corpus, report;
  double fraction = 0.3;
  int burn = 500, collect = 100, thin = 5;
  std::string mode = "resample";
};

struct FeatureArgs {
  std::string model, corpus, out = "features.tsv";
  int burn = 500, collect = 500;
};

struct GenerateArgs {
  std::string model, vocab, out = "generated.tsv", counts_out;
  int n_docs = 10, top = 100;
  std::vector<double> c;
};

struct TopicArgs {
  std::string model, vocab, out = "topics.tsv";
  int top = 20;
};

struct DiagnoseArgs {
  std::vector<int> depths{1, 2, 3, 5};
  std::vector<double> p{0.3, 0.5};
  double r = 1.0;
  long long draws = 1000000;
  long long selftest_draws = 100000;
  std::string out;
};

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s << ',';
    if constexpr (std::is_floating_point_v<T>) {
      s << format_real(v[i]);
    } else {
      s << v[i];
    }
  }
  return s.str();
}

Backend parse_backend(const std::string& b) {
  if (b == "serial") return Backend::serial;
  if (b == "openmp") return Backend::openmp;
  fail(ErrorKind::config, "unknown backend '" + b + "' (serial|openmp)");
}

void apply_workers(const Common& c) {
  int n = c.workers;
  if (n == 0) {
    if (const char* env = std::getenv("PGBN_WORKERS")) {
      try {
        n = std::stoi(env);
      } catch (const std::exception&) {
        fail(ErrorKind::config, std::string("PGBN_WORKERS is not an integer: ") + env);
      }
    }
  }
  if (n < 0) fail(ErrorKind::config, "worker count must be >= 0");
  kernels::omp::set_workers(n);
}

std::optional<Vocabulary> maybe_vocab(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_vocab(path);
}

std::string term_name(const std::optional<Vocabulary>& vocab, int v) {
  if (vocab && v < vocab->size()) return vocab->terms[static_cast<std::size_t>(v)];
  return std::to_string(v + 1);
}

void write_config(std::ostream& out, const std::vector<std::string>& config) {
  for (const auto& c : config) out << "# config: " << c << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path);
  return out;
}

int do_train(const TrainArgs& a, const Common& c) {
  Hyperparams h;
  h.eta = a.eta;
  h.a0 = a.a0;
  h.b0 = a.b0;
  h.e0 = a.e0;
  h.f0 = a.f0;
  h.k1_max = a.k1max;
  h.t_max = a.tmax;
  h.b_iters = a.burn;
  h.c_iters = a.collect;
  h.validate();
  TrainOptions opt;
  opt.gibbs.backend = parse_backend(c.backend);
  if (a.layer1 == "collapsed") {
    opt.gibbs.layer1 = Layer1Mode::collapsed;
  } else if (a.layer1 == "blocked") {
    opt.gibbs.layer1 = Layer1Mode::blocked;
  } else {
    fail(ErrorKind::config, "unknown --layer1 '" + a.layer1 + "' (collapsed|blocked)");
  }
  if (a.phi1 == "last_sample") {
    opt.phi1_export = PhiKind::last_sample;
  } else if (a.phi1 == "posterior_mean") {
    opt.phi1_export = PhiKind::posterior_mean;
  } else {
    fail(ErrorKind::config, "unknown --phi1 '" + a.phi1 + "'");
  }
  opt.check_every_iteration = a.check;

  BowData data = load_bow(a.corpus, a.vocab.empty() ? std::nullopt
                                                    : std::optional<fs::path>(a.vocab));
  fs::create_directories(a.out_dir);
  const std::vector<std::string> config = {
      "command=train",
      "corpus=" + a.corpus,
      "seed=" + std::to_string(c.seed),
      "backend=" + c.backend,
      "layer1=" + a.layer1,
      "phi1=" + a.phi1,
      "k1max=" + std::to_string(a.k1max),
      "tmax=" + std::to_string(a.tmax),
      "eta=" + join(a.eta),
      "a0=" + format_real(a.a0) + " b0=" + format_real(a.b0) +
          " e0=" + format_real(a.e0) + " f0=" + format_real(a.f0),
      "burn=" + join(a.burn) + " collect=" + join(a.collect),
  };
  std::ofstream log = open_out((fs::path(a.out_dir) / "train.log").string());
  write_config(log, config);
  opt.log = [&](const std::string& line) { log << line << '\n'; };
  const TrainSchedule sched = TrainSchedule::from(h);
  const TrainedStack stack = train_layerwise(data.counts, h, sched, Rng(c.seed), opt);
  for (std::size_t t = 0; t < stack.networks.size(); ++t) {
    const fs::path path = fs::path(a.out_dir) / ("network_T" + std::to_string(t + 1) + ".pgbn");
    save_network(path, stack.networks[t], config);
    std::cout << "wrote " << path.string() << " widths=" << join(stack.networks[t].widths)
              << '\n';
  }
  return 0;
}

Network load_model(const std::string& path) {
  std::vector<std::string> warnings;
  Network net = load_network(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return net;
}

int do_eval(const EvalArgs& a, const Common& c) {
  const Network net = load_model(a.model);
  const BowData data = load_bow(a.corpus);
  const Rng rng(c.seed);
  const HeldoutMask mask = mask_tokens(data.counts, a.fraction, rng.substream(1));
  PerplexityOptions opt;
  opt.backend = parse_backend(c.backend);
  if (a.mode == "resample") {
    opt.mode = PerplexityMode::resample;
  } else if (a.mode == "frozen") {
    opt.mode = PerplexityMode::frozen;
  } else {
    fail(ErrorKind::config, "unknown --mode '" + a.mode + "' (resample|frozen)");
  }
  const PerplexityReport rep =
      heldout_perplexity(net, mask, a.burn, a.collect, a.thin, rng.substream(2), opt);
  std::ostringstream out;
  write_config(out, {"command=eval", "model=" + a.model, "corpus=" + a.corpus,
                     "seed=" + std::to_string(c.seed), "fraction=" + format_real(a.fraction),
                     "burn=" + std::to_string(a.burn) + " collect=" + std::to_string(a.collect) +
                         " thin=" + std::to_string(a.thin),
                     "mode=" + a.mode});
  out << "perplexity\t" << format_real(rep.perplexity) << '\n';
  out << "samples\t" << rep.samples_used << '\n';
  out << "heldout_tokens\t" << rep.heldout_tokens << '\n';
  out << "floored\t" << rep.floored << '\n';
  out << "doc\tloglik\n";
  for (std::size_t j = 0; j < rep.doc_loglik.size(); ++j) {
    out << (j + 1) << '\t' << format_real(rep.doc_loglik[j]) << '\n';
  }
  if (!a.report.empty()) open_out(a.report) << out.str();
  std::cout << "perplexity=" << format_real(rep.perplexity) << " samples=" << rep.samples_used
            << " heldout_tokens=" << rep.heldout_tokens << " floored=" << rep.floored << '\n';
  return 0;
}

int do_features(const FeatureArgs& a, const Common& c) {
  const Network net = load_model(a.model);
  const BowData data = load_bow(a.corpus);
  const PosteriorSummary sum = extract_features(net, data.counts, a.burn, a.collect,
                                                Rng(c.seed), parse_backend(c.backend));
  std::ofstream out = open_out(a.out);
  write_config(out, {"command=features", "model=" + a.model, "corpus=" + a.corpus,
                     "seed=" + std::to_string(c.seed),
                     "burn=" + std::to_string(a.burn) + " collect=" + std::to_string(a.collect)});
  std::vector<bool> empty(static_cast<std::size_t>(data.counts.cols()), false);
  for (int j : sum.empty_docs) empty[static_cast<std::size_t>(j)] = true;
  out << "doc\tempty";
  for (Eigen::Index k = 0; k < sum.feature_props.rows(); ++k) out << "\tf" << (k + 1);
  out << '\n';
  for (Eigen::Index j = 0; j < sum.feature_props.cols(); ++j) {
    out << (j + 1) << '\t' << (empty[static_cast<std::size_t>(j)] ? 1 : 0);
    for (Eigen::Index k = 0; k < sum.feature_props.rows(); ++k) {
      out << '\t' << format_real(sum.feature_props(k, j));
    }
    out << '\n';
  }
  std::cout << "wrote " << a.out << " docs=" << data.counts.cols()
            << " features=" << sum.feature_props.rows()
            << " empty_docs=" << sum.empty_docs.size() << '\n';
  return 0;
}

int do_generate(const GenerateArgs& a, const Common& c) {
  const Network net = load_model(a.model);
  const auto vocab = maybe_vocab(a.vocab);
  const auto docs = generate_documents(net, a.c, a.n_docs, a.top, Rng(c.seed), true);
  std::ofstream out = open_out(a.out);
  write_config(out, {"command=generate", "model=" + a.model, "seed=" + std::to_string(c.seed),
                     "n_docs=" + std::to_string(a.n_docs), "top=" + std::to_string(a.top),
                     "c=" + (a.c.empty() ? std::string("median") : join(a.c))});
  out << "doc\ttop_terms\n";
  std::vector<Entry> entries;
  for (std::size_t j = 0; j < docs.size(); ++j) {
    out << (j + 1) << '\t';
    for (std::size_t i = 0; i < docs[j].top_terms.size(); ++i) {
      if (i) out << ' ';
      out << term_name(vocab, docs[j].top_terms[i]);
    }
    out << '\n';
    for (std::size_t v = 0; v < docs[j].counts.size(); ++v) {
      if (docs[j].counts[v] > 0) {
        entries.push_back({static_cast<int>(v), static_cast<int>(j), docs[j].counts[v]});
      }
    }
  }
  if (!a.counts_out.empty()) {
    save_bow(a.counts_out,
             CountMatrix::from_entries(net.vocab_size(), static_cast<int>(docs.size()),
                                       std::move(entries)));
  }
  std::cout << "wrote " << a.out << " docs=" << docs.size() << '\n';
  return 0;
}

int do_topics(const TopicArgs& a, const Common&) {
  const Network net = load_model(a.model);
  const auto vocab = maybe_vocab(a.vocab);
  std::ofstream out = open_out(a.out);
  write_config(out, {"command=topics", "model=" + a.model, "top=" + std::to_string(a.top)});
  out << "rank\tlayer\tfactor\tusage\ttop_words\n";
  for (const TopicRow& row : topic_rows(net, a.top)) {
    out << (row.rank + 1) << '\t' << row.layer << '\t' << (row.factor + 1) << '\t'
        << row.usage << '\t';
    for (std::size_t i = 0; i < row.top_terms.size(); ++i) {
      if (i) out << ' ';
      out << term_name(vocab, row.top_terms[i]);
    }
    out << '\n';
  }
  std::cout << "wrote " << a.out << '\n';
  return 0;
}

// Pearson statistic with bins of expected count < 5 pooled into their
// neighbour; returns (statistic, degrees of freedom).
std::pair<double, int> chi_square(const std::vector<double>& probs,
                                  const std::vector<long long>& observed, long long n) {
  std::vector<double> e;
  std::vector<double> o;
  double acc_e = 0.0;
  double acc_o = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc_e += probs[i] * static_cast<double>(n);
    acc_o += static_cast<double>(observed[i]);
    if (acc_e >= 5.0) {
      e.push_back(acc_e);
      o.push_back(acc_o);
      acc_e = acc_o = 0.0;
    }
  }
  if (!e.empty()) {
    e.back() += acc_e;
    o.back() += acc_o;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) stat += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  return {stat, static_cast<int>(e.size()) - 1};
}

int do_diagnose(const DiagnoseArgs& a, const Common& c) {
  std::ostringstream out;
  write_config(out, {"command=diagnose", "seed=" + std::to_string(c.seed),
                     "draws=" + std::to_string(a.draws), "r=" + format_real(a.r)});
  const Rng rng(c.seed);
  bool all_ok = true;
  out << "T\tp2\tmean\tvmr\tclosed_form\trel_err\n";
  std::uint64_t stream = 0;
  for (int T : a.depths) {
    for (double p : a.p) {
      const VmrResult v = vmr_diagnostic(T, p, a.r, a.draws, rng.substream(stream++));
      const double cf = vmr_closed_form(T, p);
      out << T << '\t' << format_real(p) << '\t' << std::setprecision(6) << v.mean << '\t'
          << v.vmr << '\t' << cf << '\t' << std::abs(v.vmr - cf) / cf << '\n';
    }
  }
  out << "selftest\tcase\tstatistic\tdf\tresult\n";
  const StirlingTable table;
  // 21 CRT cases plus one Log case share a family-wise level of 1e-3
  const double level = 1.0 - 1e-3 / 22.0;
  for (double r : {0.5, 1.0, 2.0}) {
    for (int n = 2; n <= 8; ++n) {
      Rng g = rng.substream(1000 + stream++);
      std::vector<long long> obs(static_cast<std::size_t>(n) + 1, 0);
      for (long long i = 0; i < a.selftest_draws; ++i) ++obs[static_cast<std::size_t>(sample_crt(n, r, g))];
      const auto [stat, df] = chi_square(crt_pmf(n, r, table), obs, a.selftest_draws);
      const bool ok = df < 1 ||
                      stat < boost::math::quantile(boost::math::chi_squared(df), level);
      all_ok = all_ok && ok;
      out << "selftest\tcrt n=" << n << " r=" << r << '\t' << stat << '\t' << df << '\t'
          << (ok ? "PASS" : "FAIL") << '\n';
    }
  }
  {
    Rng g = rng.substream(1000 + stream++);
    const double p = 0.5;
    std::vector<double> probs;
    double term = p / -std::log1p(-p);
    for (int u = 1; u <= 30; ++u) {
      probs.push_back(term);
      term *= p * u / (u + 1.0);
    }
    std::vector<long long> obs(probs.size(), 0);
    for (long long i = 0; i < a.selftest_draws; ++i) {
      const auto u = static_cast<std::size_t>(sample_log(p, g));
      ++obs[std::min(u, probs.size()) - 1];
    }
    const auto [stat, df] = chi_square(probs, obs, a.selftest_draws);
    const bool ok = stat < boost::math::quantile(boost::math::chi_squared(df), level);
    all_ok = all_ok && ok;
    out << "selftest\tlog p=0.5\t" << stat << '\t' << df << '\t' << (ok ? "PASS" : "FAIL")
        << '\n';
  }
  std::cout << out.str();
  if (!a.out.empty()) open_out(a.out) << out.str();
  return all_ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Poisson gamma belief network: training, evaluation and simulation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
    sub->add_option("--workers", common.workers,
                    "OpenMP workers (0: PGBN_WORKERS or the OpenMP default)");
    sub->add_option("--backend", common.backend, "serial|openmp")->capture_default_str();
  };

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "layer-wise training of depths 1..tmax");
  train->add_option("--corpus", tr.corpus, "UCI bag-of-words file")->required();
  train->add_option("--vocab", tr.vocab, "vocabulary, one term per line");
  train->add_option("--out-dir", tr.out_dir, "directory for networks and train.log")
      ->capture_default_str();
  train->add_option("--k1max", tr.k1max, "width budget of layer 1")->capture_default_str();
  train->add_option("--tmax", tr.tmax, "depth budget")->capture_default_str();
  train->add_option("--eta", tr.eta, "Dirichlet concentration per layer (last repeats)")
      ->delimiter(',');
  train->add_option("--a0", tr.a0)->capture_default_str();
  train->add_option("--b0", tr.b0)->capture_default_str();
  train->add_option("--e0", tr.e0)->capture_default_str();
  train->add_option("--f0", tr.f0)->capture_default_str();
  train->add_option("--burn", tr.burn, "B_T per depth (last repeats)")->delimiter(',');
  train->add_option("--collect", tr.collect, "C_T per depth (last repeats)")->delimiter(',');
  train->add_option("--layer1", tr.layer1, "collapsed|blocked")->capture_default_str();
  train->add_option("--phi1", tr.phi1, "last_sample|posterior_mean")->capture_default_str();
  train->add_flag("--check", tr.check, "verify count conservation every iteration");
  add_common(train);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "per-heldout-word perplexity");
  eval->add_option("--model", ev.model)->required();
  eval->add_option("--corpus", ev.corpus)->required();
  eval->add_option("--fraction", ev.fraction, "training share of each document's tokens")
      ->capture_default_str();
  eval->add_option("--burn", ev.burn)->capture_default_str();
  eval->add_option("--collect", ev.collect)->capture_default_str();
  eval->add_option("--thin", ev.thin)->capture_default_str();
  eval->add_option("--mode", ev.mode, "resample|frozen")->capture_default_str();
  eval->add_option("--report", ev.report, "write a tab-separated report here");
  add_common(eval);

  FeatureArgs fe;
  auto* features = app.add_subcommand("features", "posterior mean feature proportions");
  features->add_option("--model", fe.model)->required();
  features->add_option("--corpus", fe.corpus)->required();
  features->add_option("--burn", fe.burn)->capture_default_str();
  features->add_option("--collect", fe.collect)->capture_default_str();
  features->add_option("--out", fe.out)->capture_default_str();
  add_common(features);

  GenerateArgs ge;
  auto* generate = app.add_subcommand("generate", "synthetic documents from a network");
  generate->add_option("--model", ge.model)->required();
  generate->add_option("--vocab", ge.vocab);
  generate->add_option("--n-docs", ge.n_docs)->capture_default_str();
  generate->add_option("--top", ge.top, "terms to list per document")->capture_default_str();
  generate->add_option("--c", ge.c, "c^(2)..c^(T+1) (default: training medians)")
      ->delimiter(',');
  generate->add_option("--out", ge.out)->capture_default_str();
  generate->add_option("--counts-out", ge.counts_out, "sampled counts as UCI bag-of-words");
  add_common(generate);

  TopicArgs to;
  auto* topics = app.add_subcommand("topics", "projected topic-word lists per layer");
  topics->add_option("--model", to.model)->required();
  topics->add_option("--vocab", to.vocab);
  topics->add_option("--top", to.top)->capture_default_str();
  topics->add_option("--out", to.out)->capture_default_str();
  add_common(topics);

  DiagnoseArgs di;
  auto* diagnose = app.add_subcommand("diagnose", "overdispersion and sampler self-tests");
  diagnose->add_option("--depths", di.depths)->delimiter(',');
  diagnose->add_option("--p", di.p)->delimiter(',');
  diagnose->add_option("--r", di.r)->capture_default_str();
  diagnose->add_option("--draws", di.draws)->capture_default_str();
  diagnose->add_option("--selftest-draws", di.selftest_draws)->capture_default_str();
  diagnose->add_option("--out", di.out);
  add_common(diagnose);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: code=config message=" << e.what() << '\n';
    return 2;
  }

  try {
    apply_workers(common);
    parse_backend(common.backend);
    if (*train) return do_train(tr, common);
    if (*eval) return do_eval(ev, common);
    if (*features) return do_features(fe, common);
    if (*generate) return do_generate(ge, common);
    if (*topics) return do_topics(to, common);
    if (*diagnose) return do_diagnose(di, common);
  } catch (const Error& e) {
    std::cerr << "error: code=" << to_string(e.kind()) << " message=" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: code=internal message=" << e.what() << '\n';
    return 1;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace pgbn

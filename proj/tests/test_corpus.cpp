#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "pgbn/corpus.hpp"
#include "pgbn/error.hpp"

using namespace pgbn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pgbn_test_corpus";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

// kind and line of the parse error raised by loading `text`
std::pair<ErrorKind, std::size_t> load_error(const std::string& text) {
  try {
    load_bow(write_file("bad.txt", text));
  } catch (const ParseError& e) {
    return {e.kind(), e.line()};
  } catch (const Error& e) {
    return {e.kind(), 0};
  }
  FAIL("no error thrown");
  return {ErrorKind::io, 0};
}

}  // namespace

TEST_CASE("load_bow reads the UCI format") {
  const BowData d = load_bow(write_file("a.txt", "2\n3\n2\n1 1 4\n2 3 1\n"));
  CHECK(d.counts.rows() == 3);
  CHECK(d.counts.cols() == 2);
  CHECK(d.counts.entries() == std::vector<Entry>{{0, 0, 4}, {2, 1, 1}});
  CHECK(d.counts.doc_total(0) == 4);
  CHECK(d.counts.total() == 5);
  CHECK(!d.vocab);

  const BowData empty = load_bow(write_file("e.txt", "3\n4\n0\n"));
  CHECK(empty.counts.nnz() == 0);
  CHECK(empty.counts.cols() == 3);
  CHECK(empty.counts.doc_total(2) == 0);
}

TEST_CASE("load_bow errors name the line") {
  CHECK(load_error("2\nx\n1\n1 1 1\n") == std::pair{ErrorKind::parse, std::size_t{2}});
  CHECK(load_error("2\n3\n").first == ErrorKind::parse);
  CHECK(load_error("2\n3\n1\n3 1 1\n") == std::pair{ErrorKind::parse, std::size_t{4}});
  CHECK(load_error("2\n3\n1\n1 4 1\n") == std::pair{ErrorKind::parse, std::size_t{4}});
  CHECK(load_error("2\n3\n2\n1 1 1\n2 2 0\n") == std::pair{ErrorKind::parse, std::size_t{5}});
  CHECK(load_error("2\n3\n2\n1 1 1\n1 1 2\n") == std::pair{ErrorKind::parse, std::size_t{5}});
  CHECK(load_error("2\n3\n2\n1 1 1\n").first == ErrorKind::parse);
  CHECK(load_error("2\n3\n1\n1 1 -2\n").first == ErrorKind::parse);
}

TEST_CASE("save and load round-trip exactly") {
  const CountMatrix m = CountMatrix::from_entries(
      5, 4, {{4, 3, 9}, {0, 0, 1}, {2, 0, 3}, {1, 2, 1234567890123LL}});
  const fs::path p = scratch("rt.txt");
  save_bow(p, m);
  CHECK(load_bow(p).counts == m);
  const Vocabulary v{{"alpha", "beta", "gamma", "delta", "eps"}};
  save_vocab(scratch("rt.vocab"), v);
  const BowData both = load_bow(p, scratch("rt.vocab"));
  REQUIRE(both.vocab);
  CHECK(both.vocab->terms == v.terms);
}

TEST_CASE("vocabulary checks") {
  CHECK_THROWS_AS(load_vocab(write_file("dup.vocab", "a\nb\na\n")), ParseError);
  save_bow(scratch("v.txt"), CountMatrix::from_entries(3, 1, {{0, 0, 1}}));
  try {
    load_bow(scratch("v.txt"), write_file("short.vocab", "a\nb\n"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension);
  }
}

TEST_CASE("count matrix rejects bad entries") {
  CHECK_THROWS_AS(CountMatrix::from_entries(2, 2, {{0, 0, 1}, {0, 0, 2}}), Error);
  CHECK_THROWS_AS(CountMatrix::from_entries(2, 2, {{0, 0, 0}}), Error);
  CHECK_THROWS_AS(CountMatrix::from_entries(2, 2, {{2, 0, 1}}), Error);
}

TEST_CASE("filter_vocab identity and thresholds") {
  const Vocabulary v{{"a", "b", "c"}};
  const CountMatrix m =
      CountMatrix::from_entries(3, 2, {{0, 0, 2}, {1, 0, 4}, {2, 1, 7}, {0, 1, 3}});
  const FilteredCorpus same = filter_vocab(m, v, {}, 0);
  CHECK(same.counts == m);
  CHECK(same.vocab.terms == v.terms);
  const FilteredCorpus cut = filter_vocab(m, v, {}, 5);
  CHECK(cut.vocab.terms == std::vector<std::string>{"a", "c"});
  CHECK(cut.kept_terms == std::vector<int>{0, 2});
  CHECK(cut.counts.entries() == std::vector<Entry>{{0, 0, 2}, {0, 1, 3}, {1, 1, 7}});
  CHECK_THROWS_AS(filter_vocab(m, Vocabulary{{"a"}}, {}, 0), Error);
}

TEST_CASE("filter_vocab on a ten-document toy corpus") {
  // terms: the, cat, dog, fish, bird, of
  const Vocabulary v{{"the", "cat", "dog", "fish", "bird", "of"}};
  std::vector<Entry> e;
  for (int j = 0; j < 10; ++j) {
    e.push_back({0, j, 3});            // "the" 30 total, stopword
    if (j < 6) e.push_back({1, j, 1}); // cat 6
    if (j < 2) e.push_back({2, j, 2}); // dog 4
    if (j == 9) e.push_back({3, j, 5}); // fish 5
    if (j == 4) e.push_back({4, j, 1}); // bird 1
    if (j % 2 == 0) e.push_back({5, j, 2});  // "of" 10, stopword
  }
  const CountMatrix m = CountMatrix::from_entries(6, 10, e);
  const FilteredCorpus f = filter_vocab(m, v, {"the", "of"}, 5);
  CHECK(f.vocab.terms == std::vector<std::string>{"cat", "fish"});
  CHECK(f.counts.rows() == 2);
  CHECK(f.counts.cols() == 10);
  for (int j = 0; j < 10; ++j) {
    CHECK(f.counts.get(0, j) == (j < 6 ? 1 : 0));
    CHECK(f.counts.get(1, j) == (j == 9 ? 5 : 0));
  }
  CHECK(f.counts.doc_total(7) == 0);  // emptied document is kept
}

TEST_CASE("mask_tokens exact split") {
  const CountMatrix m = CountMatrix::from_entries(3, 2, {{0, 0, 10}, {2, 0, 10}, {1, 1, 1}});
  const HeldoutMask mask = mask_tokens(m, 0.3, Rng(3));
  CHECK(mask.train.doc_total(0) == 6);
  CHECK(mask.heldout.doc_total(0) == 14);
  CHECK(mask.train.get(1, 0) == 0);
  for (int v = 0; v < 3; ++v) {
    for (int j = 0; j < 2; ++j) {
      CHECK(mask.train.get(v, j) + mask.heldout.get(v, j) == m.get(v, j));
      CHECK(mask.train.get(v, j) <= m.get(v, j));
    }
  }
  CHECK(train_token_target(1, 0.5) == 1);
  CHECK(train_token_target(7, 0.3) == 2);
  CHECK(train_token_target(5, 0.3) == 2);  // 1.5 rounds up
  CHECK(mask_tokens(m, 0.5, Rng(1)).train.doc_total(1) == 1);
  CHECK_THROWS_AS(mask_tokens(m, 0.0, Rng(1)), Error);
  CHECK_THROWS_AS(mask_tokens(m, 1.0, Rng(1)), Error);
}

TEST_CASE("mask_tokens is hypergeometric per term") {
  const CountMatrix m = CountMatrix::from_entries(2, 1, {{0, 0, 100}, {1, 0, 300}});
  const int trials = 10000;
  double sum0 = 0.0;
  double sum1 = 0.0;
  const Rng base(17);
  for (int i = 0; i < trials; ++i) {
    const HeldoutMask mk = mask_tokens(m, 0.3, base.substream(static_cast<std::uint64_t>(i)));
    sum0 += static_cast<double>(mk.train.get(0, 0));
    sum1 += static_cast<double>(mk.train.get(1, 0));
    REQUIRE(mk.train.doc_total(0) == 120);
  }
  // draws n = 120 from N = 400 with K = 100 marked
  const double var = 120.0 * 0.25 * 0.75 * (400.0 - 120.0) / 399.0;
  const double se = std::sqrt(var / trials);
  CHECK(std::abs(sum0 / trials - 30.0) < 3 * se);
  CHECK(std::abs(sum1 / trials - 90.0) < 3 * se);
}

TEST_CASE("mask_tokens property over random corpora") {
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<Entry> e;
    const int V = 1 + static_cast<int>(rng.below(8));
    const int J = 1 + static_cast<int>(rng.below(6));
    for (int j = 0; j < J; ++j) {
      for (int v = 0; v < V; ++v) {
        if (rng.uniform() < 0.5) e.push_back({v, j, 1 + static_cast<Count>(rng.below(20))});
      }
    }
    const CountMatrix m = CountMatrix::from_entries(V, J, e);
    const double f = 0.05 + 0.9 * rng.uniform();
    const HeldoutMask mk = mask_tokens(m, f, rng.substream(static_cast<std::uint64_t>(rep)));
    for (int j = 0; j < J; ++j) {
      CHECK(mk.train.doc_total(j) == train_token_target(m.doc_total(j), f));
      for (int v = 0; v < V; ++v) {
        CHECK(mk.train.get(v, j) + mk.heldout.get(v, j) == m.get(v, j));
      }
    }
  }
}

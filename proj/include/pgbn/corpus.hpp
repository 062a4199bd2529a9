#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "pgbn/count_dist.hpp"
#include "pgbn/rng.hpp"

namespace pgbn {

struct Vocabulary {
  std::vector<std::string> terms;

  int size() const { return static_cast<int>(terms.size()); }
};

struct Entry {
  int term = 0;
  int doc = 0;
  Count count = 0;

  bool operator==(const Entry&) const = default;
};

// Sparse term x document count matrix, stored by document (CSC). Entries
// are positive, unique per (term, doc), and sorted by term within each doc.
class CountMatrix {
 public:
  CountMatrix() = default;
  CountMatrix(int rows, int cols);

  static CountMatrix from_entries(int rows, int cols, std::vector<Entry> entries);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return terms_.size(); }

  std::span<const int> terms(int doc) const;
  std::span<const Count> counts(int doc) const;
  Count doc_total(int doc) const;
  Count total() const;
  Count get(int term, int doc) const;

  std::vector<Count> term_totals() const;
  std::vector<Entry> entries() const;

  bool operator==(const CountMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<int> terms_;
  std::vector<Count> counts_;
};

struct BowData {
  std::optional<Vocabulary> vocab;
  CountMatrix counts;
};

// UCI bag-of-words: D, W, NNZ header lines then "docID wordID count"
// triples, 1-indexed.
BowData load_bow(const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& vocab_path = {});
void save_bow(const std::filesystem::path& path, const CountMatrix& m);

Vocabulary load_vocab(const std::filesystem::path& path);
void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab);

struct FilteredCorpus {
  Vocabulary vocab;
  CountMatrix counts;
  std::vector<int> kept_terms;  // new index -> old index
};

FilteredCorpus filter_vocab(const CountMatrix& m, const Vocabulary& vocab,
                            const std::unordered_set<std::string>& stoplist,
                            Count min_count);

struct HeldoutMask {
  CountMatrix train;
  CountMatrix heldout;
  double fraction = 0.0;
};

// Per document, exactly round_half_up(fraction * x_.j) tokens are drawn
// without replacement into `train`; the rest go to `heldout`. Document j
// uses rng.substream(j).
HeldoutMask mask_tokens(const CountMatrix& m, double fraction, const Rng& rng);

Count train_token_target(Count doc_total, double fraction);

}  // namespace pgbn

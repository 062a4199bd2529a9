#include "pgbn/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pgbn/error.hpp"

namespace pgbn {

CountMatrix::CountMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), col_ptr_(static_cast<std::size_t>(cols) + 1, 0) {
  require(rows >= 0 && cols >= 0, ErrorKind::dimension,
          "count matrix dimensions must be non-negative");
}

CountMatrix CountMatrix::from_entries(int rows, int cols,
                                      std::vector<Entry> entries) {
  CountMatrix m(rows, cols);
  for (const Entry& e : entries) {
    if (e.term < 0 || e.term >= rows || e.doc < 0 || e.doc >= cols) {
      fail(ErrorKind::dimension, "entry (" + std::to_string(e.term) + ", " +
                                     std::to_string(e.doc) + ") out of range");
    }
    if (e.count <= 0) {
      fail(ErrorKind::invalid_parameter, "entry counts must be positive");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.term < b.term;
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].doc == entries[i - 1].doc &&
        entries[i].term == entries[i - 1].term) {
      fail(ErrorKind::invalid_parameter,
           "duplicate entry (" + std::to_string(entries[i].term) + ", " +
               std::to_string(entries[i].doc) + ")");
    }
  }
  m.terms_.reserve(entries.size());
  m.counts_.reserve(entries.size());
  for (const Entry& e : entries) {
    m.terms_.push_back(e.term);
    m.counts_.push_back(e.count);
    ++m.col_ptr_[static_cast<std::size_t>(e.doc) + 1];
  }
  for (std::size_t j = 1; j < m.col_ptr_.size(); ++j) {
    m.col_ptr_[j] += m.col_ptr_[j - 1];
  }
  return m;
}

std::span<const int> CountMatrix::terms(int doc) const {
  const auto b = col_ptr_[static_cast<std::size_t>(doc)];
  const auto e = col_ptr_[static_cast<std::size_t>(doc) + 1];
  return {terms_.data() + b, e - b};
}

std::span<const Count> CountMatrix::counts(int doc) const {
  const auto b = col_ptr_[static_cast<std::size_t>(doc)];
  const auto e = col_ptr_[static_cast<std::size_t>(doc) + 1];
  return {counts_.data() + b, e - b};
}

Count CountMatrix::doc_total(int doc) const {
  Count total = 0;
  for (Count c : counts(doc)) total += c;
  return total;
}

Count CountMatrix::total() const {
  Count total = 0;
  for (Count c : counts_) total += c;
  return total;
}

Count CountMatrix::get(int term, int doc) const {
  const auto t = terms(doc);
  const auto it = std::lower_bound(t.begin(), t.end(), term);
  if (it == t.end() || *it != term) return 0;
  return counts(doc)[static_cast<std::size_t>(it - t.begin())];
}

std::vector<Count> CountMatrix::term_totals() const {
  std::vector<Count> totals(static_cast<std::size_t>(rows_), 0);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    totals[static_cast<std::size_t>(terms_[i])] += counts_[i];
  }
  return totals;
}

std::vector<Entry> CountMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (int j = 0; j < cols_; ++j) {
    const auto t = terms(j);
    const auto c = counts(j);
    for (std::size_t i = 0; i < t.size(); ++i) out.push_back({t[i], j, c[i]});
  }
  return out;
}

namespace {

// Reads the next non-empty line, tracking line numbers.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

template <typename T>
bool parse_fields(const std::string& line, std::span<T> out) {
  const char* p = line.data();
  const char* end = line.data() + line.size();
  for (T& v : out) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) return false;
    p = next;
  }
  while (p < end && (*p == ' ' || *p == '\t')) ++p;
  return p == end;
}

long long header_value(std::istream& in, std::size_t& line_no,
                       const char* name) {
  std::string line;
  if (!next_line(in, line, line_no)) {
    throw ParseError(line_no + 1, std::string("missing header field ") + name);
  }
  long long v = 0;
  if (!parse_fields(line, std::span<long long>(&v, 1)) || v < 0) {
    throw ParseError(line_no, std::string("malformed header field ") + name);
  }
  return v;
}

}  // namespace

BowData load_bow(const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& vocab_path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open corpus file " + path.string());
  std::size_t line_no = 0;
  const long long docs = header_value(in, line_no, "D");
  const long long words = header_value(in, line_no, "W");
  const long long nnz = header_value(in, line_no, "NNZ");
  if (docs > std::numeric_limits<int>::max() ||
      words > std::numeric_limits<int>::max()) {
    throw ParseError(line_no, "header dimensions too large");
  }
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  std::string line;
  std::map<std::pair<int, int>, std::size_t> seen;
  while (next_line(in, line, line_no)) {
    long long f[3] = {0, 0, 0};
    if (!parse_fields(line, std::span<long long>(f, 3))) {
      throw ParseError(line_no, "expected 'docID wordID count'");
    }
    if (f[0] < 1 || f[0] > docs) throw ParseError(line_no, "docID out of range");
    if (f[1] < 1 || f[1] > words) {
      throw ParseError(line_no, "wordID out of range");
    }
    if (f[2] <= 0) throw ParseError(line_no, "count must be positive");
    const int doc = static_cast<int>(f[0] - 1);
    const int term = static_cast<int>(f[1] - 1);
    if (!seen.emplace(std::pair{doc, term}, line_no).second) {
      throw ParseError(line_no, "duplicate (docID, wordID) pair");
    }
    entries.push_back({term, doc, static_cast<Count>(f[2])});
  }
  if (static_cast<long long>(entries.size()) != nnz) {
    throw ParseError(line_no, "NNZ header says " + std::to_string(nnz) +
                                  " but file has " +
                                  std::to_string(entries.size()) + " triples");
  }
  BowData data;
  data.counts = CountMatrix::from_entries(static_cast<int>(words),
                                          static_cast<int>(docs),
                                          std::move(entries));
  if (vocab_path) {
    data.vocab = load_vocab(*vocab_path);
    if (data.vocab->size() != data.counts.rows()) {
      fail(ErrorKind::dimension,
           "vocabulary has " + std::to_string(data.vocab->size()) +
               " terms but corpus W = " + std::to_string(data.counts.rows()));
    }
  }
  return data;
}

void save_bow(const std::filesystem::path& path, const CountMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write corpus file " + path.string());
  out << m.cols() << '\n' << m.rows() << '\n' << m.nnz() << '\n';
  for (int j = 0; j < m.cols(); ++j) {
    const auto t = m.terms(j);
    const auto c = m.counts(j);
    for (std::size_t i = 0; i < t.size(); ++i) {
      out << (j + 1) << ' ' << (t[i] + 1) << ' ' << c[i] << '\n';
    }
  }
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open vocabulary file " + path.string());
  Vocabulary vocab;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!seen.insert(line).second) {
      throw ParseError(line_no, "duplicate vocabulary term '" + line + "'");
    }
    vocab.terms.push_back(line);
  }
  return vocab;
}

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write vocabulary " + path.string());
  for (const auto& t : vocab.terms) out << t << '\n';
}

FilteredCorpus filter_vocab(const CountMatrix& m, const Vocabulary& vocab,
                            const std::unordered_set<std::string>& stoplist,
                            Count min_count) {
  if (vocab.size() != m.rows()) {
    fail(ErrorKind::dimension, "filter_vocab: vocabulary size " +
                                   std::to_string(vocab.size()) +
                                   " != corpus rows " + std::to_string(m.rows()));
  }
  require(min_count >= 0, ErrorKind::invalid_parameter,
          "filter_vocab: min_count must be >= 0");
  const auto totals = m.term_totals();
  FilteredCorpus out;
  std::vector<int> new_index(static_cast<std::size_t>(m.rows()), -1);
  for (int v = 0; v < m.rows(); ++v) {
    const auto& term = vocab.terms[static_cast<std::size_t>(v)];
    if (stoplist.contains(term)) continue;
    if (totals[static_cast<std::size_t>(v)] < min_count) continue;
    new_index[static_cast<std::size_t>(v)] = static_cast<int>(out.kept_terms.size());
    out.kept_terms.push_back(v);
    out.vocab.terms.push_back(term);
  }
  std::vector<Entry> entries;
  for (const Entry& e : m.entries()) {
    const int nv = new_index[static_cast<std::size_t>(e.term)];
    if (nv >= 0) entries.push_back({nv, e.doc, e.count});
  }
  out.counts = CountMatrix::from_entries(out.vocab.size(), m.cols(),
                                         std::move(entries));
  return out;
}

Count train_token_target(Count doc_total, double fraction) {
  return static_cast<Count>(
      std::floor(fraction * static_cast<double>(doc_total) + 0.5));
}

HeldoutMask mask_tokens(const CountMatrix& m, double fraction, const Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    fail(ErrorKind::invalid_parameter,
         "mask fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  std::vector<Entry> train;
  std::vector<Entry> heldout;
  std::vector<int> tokens;
  std::vector<Count> picked;
  for (int j = 0; j < m.cols(); ++j) {
    const auto t = m.terms(j);
    const auto c = m.counts(j);
    tokens.clear();
    for (std::size_t i = 0; i < t.size(); ++i) {
      tokens.insert(tokens.end(), static_cast<std::size_t>(c[i]),
                    static_cast<int>(i));
    }
    const auto n_train = static_cast<std::size_t>(
        train_token_target(static_cast<Count>(tokens.size()), fraction));
    Rng doc_rng = rng.substream(static_cast<std::uint64_t>(j));
    // partial Fisher-Yates: the first n_train slots are the training sample
    for (std::size_t i = 0; i < n_train; ++i) {
      const auto pick = i + doc_rng.below(tokens.size() - i);
      std::swap(tokens[i], tokens[pick]);
    }
    picked.assign(t.size(), 0);
    for (std::size_t i = 0; i < n_train; ++i) {
      ++picked[static_cast<std::size_t>(tokens[i])];
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (picked[i] > 0) train.push_back({t[i], j, picked[i]});
      if (c[i] - picked[i] > 0) heldout.push_back({t[i], j, c[i] - picked[i]});
    }
  }
  HeldoutMask mask;
  mask.fraction = fraction;
  mask.train = CountMatrix::from_entries(m.rows(), m.cols(), std::move(train));
  mask.heldout = CountMatrix::from_entries(m.rows(), m.cols(), std::move(heldout));
  return mask;
}

}  // namespace pgbn

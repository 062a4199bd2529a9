#include "pgbn/network_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pgbn/error.hpp"

namespace pgbn {

namespace {

constexpr const char* kMagic = "pgbn-network";

[[noreturn]] void corrupt(std::size_t line, const std::string& what) {
  fail(ErrorKind::serialization, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
void write_list(std::ostream& out, const char* key, const std::vector<T>& v) {
  out << key << ' ' << v.size();
  for (const T& x : v) {
    if constexpr (std::is_floating_point_v<T>) {
      out << ' ' << format_real(x);
    } else {
      out << ' ' << x;
    }
  }
  out << '\n';
}

class Fields {
 public:
  Fields(const std::string& line, std::size_t line_no) : line_no_(line_no) {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens_.push_back(tok);
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& key() const { return tokens_.front(); }
  const std::string& str(std::size_t i) const { return tokens_.at(i); }
  std::size_t line() const { return line_no_; }

  template <typename T>
  T get(std::size_t i) const {
    if (i >= tokens_.size()) corrupt(line_no_, "missing field after '" + key() + "'");
    const std::string& s = tokens_[i];
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      corrupt(line_no_, "bad number '" + s + "'");
    }
    return v;
  }

  // "key n v1 .. vn" starting at field `first`.
  template <typename T>
  std::vector<T> list(std::size_t first = 1) const {
    const auto n = get<long long>(first);
    if (n < 0 || static_cast<std::size_t>(n) + first + 1 > tokens_.size()) {
      corrupt(line_no_, "list length " + std::to_string(n) + " does not match '" +
                            key() + "' line");
    }
    std::vector<T> out;
    for (long long i = 0; i < n; ++i) out.push_back(get<T>(first + 1 + static_cast<std::size_t>(i)));
    if (first + 1 + static_cast<std::size_t>(n) != tokens_.size()) {
      corrupt(line_no_, "trailing fields on '" + key() + "' line");
    }
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::size_t line_no_;
};

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(ErrorKind::serialization, "cannot format real");
  return std::string(buf, p);
}

void write_network(std::ostream& out, const Network& net,
                   const std::vector<std::string>& config) {
  net.validate();
  const int T = net.depth();
  out << kMagic << ' ' << kNetworkFormatVersion << '\n';
  for (const auto& c : config) out << "# config: " << c << '\n';
  out << "depth " << T << '\n';
  write_list(out, "widths", net.widths);
  out << "phi_kind " << to_string(net.phi_kind) << '\n';
  out << "gamma0 " << format_real(net.gamma0) << '\n';
  out << "c0 " << format_real(net.c0) << '\n';
  const Hyperparams& h = net.hyper;
  write_list(out, "eta", h.eta);
  out << "a0 " << format_real(h.a0) << '\n';
  out << "b0 " << format_real(h.b0) << '\n';
  out << "e0 " << format_real(h.e0) << '\n';
  out << "f0 " << format_real(h.f0) << '\n';
  out << "k1_max " << h.k1_max << '\n';
  out << "t_max " << h.t_max << '\n';
  write_list(out, "b_iters", h.b_iters);
  write_list(out, "c_iters", h.c_iters);
  write_list(out, "r", std::vector<double>(net.r.data(), net.r.data() + net.r.size()));
  write_list(out, "c_median", net.c_median);
  for (std::size_t t = 0; t < net.usage.size(); ++t) {
    out << "usage " << (t + 1) << ' ' << net.usage[t].size();
    for (Count u : net.usage[t]) out << ' ' << u;
    out << '\n';
  }
  for (int t = 1; t <= T; ++t) {
    const auto& ph = net.phi[static_cast<std::size_t>(t - 1)];
    out << "phi " << t << ' ' << ph.rows() << ' ' << ph.cols() << '\n';
    for (int k = 0; k < ph.cols(); ++k) {
      for (int v = 0; v < ph.rows(); ++v) {
        if (v > 0) out << ' ';
        out << format_real(ph(v, k));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Network read_network(std::istream& in, std::vector<std::string>* warnings) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next()) fail(ErrorKind::serialization, "empty network file");
  {
    Fields f(line, line_no);
    if (f.size() != 2 || f.key() != kMagic) {
      corrupt(line_no, "not a pgbn network file");
    }
    const int version = f.get<int>(1);
    if (version != kNetworkFormatVersion) {
      fail(ErrorKind::serialization,
           "network format version " + std::to_string(version) +
               " is not supported (expected " +
               std::to_string(kNetworkFormatVersion) + ")");
    }
  }
  Network net;
  int depth = -1;
  bool ended = false;
  while (!ended && next()) {
    Fields f(line, line_no);
    const std::string& key = f.key();
    if (key == "end") {
      ended = true;
    } else if (key == "depth") {
      depth = f.get<int>(1);
      if (depth < 1) corrupt(line_no, "depth must be >= 1");
      net.phi.assign(static_cast<std::size_t>(depth), Eigen::MatrixXd());
    } else if (key == "widths") {
      net.widths = f.list<int>();
    } else if (key == "phi_kind") {
      if (f.size() != 2) corrupt(line_no, "expected 'phi_kind <kind>'");
      if (f.str(1) == "last_sample") {
        net.phi_kind = PhiKind::last_sample;
      } else if (f.str(1) == "posterior_mean") {
        net.phi_kind = PhiKind::posterior_mean;
      } else {
        corrupt(line_no, "unknown phi_kind '" + f.str(1) + "'");
      }
    } else if (key == "gamma0") {
      net.gamma0 = f.get<double>(1);
    } else if (key == "c0") {
      net.c0 = f.get<double>(1);
    } else if (key == "eta") {
      net.hyper.eta = f.list<double>();
    } else if (key == "a0") {
      net.hyper.a0 = f.get<double>(1);
    } else if (key == "b0") {
      net.hyper.b0 = f.get<double>(1);
    } else if (key == "e0") {
      net.hyper.e0 = f.get<double>(1);
    } else if (key == "f0") {
      net.hyper.f0 = f.get<double>(1);
    } else if (key == "k1_max") {
      net.hyper.k1_max = f.get<int>(1);
    } else if (key == "t_max") {
      net.hyper.t_max = f.get<int>(1);
    } else if (key == "b_iters") {
      net.hyper.b_iters = f.list<int>();
    } else if (key == "c_iters") {
      net.hyper.c_iters = f.list<int>();
    } else if (key == "r") {
      const auto r = f.list<double>();
      net.r = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    } else if (key == "c_median") {
      net.c_median = f.list<double>();
    } else if (key == "usage") {
      const int t = f.get<int>(1);
      if (t < 1 || (depth >= 1 && t > depth)) corrupt(line_no, "usage layer out of range");
      if (net.usage.size() < static_cast<std::size_t>(t)) net.usage.resize(static_cast<std::size_t>(t));
      net.usage[static_cast<std::size_t>(t - 1)] = f.list<Count>(2);
    } else if (key == "phi") {
      if (depth < 1) corrupt(line_no, "phi block before depth");
      const int t = f.get<int>(1);
      const int rows = f.get<int>(2);
      const int cols = f.get<int>(3);
      if (t < 1 || t > depth) corrupt(line_no, "phi layer out of range");
      if (net.widths.size() != static_cast<std::size_t>(depth) + 1 ||
          rows != net.widths[static_cast<std::size_t>(t - 1)] ||
          cols != net.widths[static_cast<std::size_t>(t)]) {
        corrupt(line_no, "phi block dimensions disagree with widths");
      }
      Eigen::MatrixXd ph(rows, cols);
      for (int k = 0; k < cols; ++k) {
        if (!std::getline(in, line)) corrupt(line_no + 1, "truncated phi block");
        ++line_no;
        Fields col(line, line_no);
        if (col.size() != static_cast<std::size_t>(rows)) {
          corrupt(line_no, "phi column has " + std::to_string(col.size()) +
                               " values, expected " + std::to_string(rows));
        }
        for (int v = 0; v < rows; ++v) ph(v, k) = col.get<double>(static_cast<std::size_t>(v));
      }
      net.phi[static_cast<std::size_t>(t - 1)] = std::move(ph);
    } else {
      if (warnings) {
        warnings->push_back("line " + std::to_string(line_no) +
                            ": ignoring unknown field '" + key + "'");
      }
    }
  }
  if (!ended) fail(ErrorKind::serialization, "network file is truncated (no 'end')");
  if (depth < 1) fail(ErrorKind::serialization, "network file has no depth");
  if (net.widths.size() != static_cast<std::size_t>(depth) + 1) {
    fail(ErrorKind::serialization, "widths do not match depth");
  }
  for (int t = 1; t <= depth; ++t) {
    if (net.phi[static_cast<std::size_t>(t - 1)].size() == 0) {
      fail(ErrorKind::serialization, "missing phi block for layer " + std::to_string(t));
    }
  }
  if (net.r.size() != net.widths.back()) {
    fail(ErrorKind::serialization, "r length does not match the top width");
  }
  net.validate();
  return net;
}

void save_network(const std::filesystem::path& path, const Network& net,
                  const std::vector<std::string>& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write network file " + path.string());
  write_network(out, net, config);
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

Network load_network(const std::filesystem::path& path,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open network file " + path.string());
  return read_network(in, warnings);
}

}  // namespace pgbn

#include <cmath>
#include <limits>
#include <string>

#include "pgbn/count_dist.hpp"
#include "pgbn/error.hpp"

namespace pgbn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::size_t row_offset(int n) {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2;
}

}  // namespace

StirlingTable::StirlingTable(int max_n) : max_n_(max_n) {
  require(max_n >= 0, ErrorKind::invalid_parameter,
          "stirling table size must be >= 0");
  log_entries_.assign(row_offset(max_n + 1), kNegInf);
  log_entries_[0] = 0.0;  // |s(0, 0)| = 1
  for (int n = 0; n < max_n; ++n) {
    const double log_n = n > 0 ? std::log(static_cast<double>(n)) : kNegInf;
    for (int l = 0; l <= n + 1; ++l) {
      // |s(n+1, l)| = n |s(n, l)| + |s(n, l-1)|
      const double keep = l <= n ? log_n + log_abs(n, l) : kNegInf;
      const double grow = l >= 1 ? log_abs(n, l - 1) : kNegInf;
      log_entries_[row_offset(n + 1) + static_cast<std::size_t>(l)] =
          log_add(keep, grow);
    }
  }
}

double StirlingTable::log_abs(int n, int l) const {
  if (n < 0 || n > max_n_) {
    fail(ErrorKind::capacity, "stirling table holds n <= " +
                                  std::to_string(max_n_) + ", asked for " +
                                  std::to_string(n));
  }
  if (l < 0 || l > n) return kNegInf;
  return log_entries_[row_offset(n) + static_cast<std::size_t>(l)];
}

std::vector<double> crt_pmf(int n, double r, const StirlingTable& table) {
  if (n > table.max_n()) {
    fail(ErrorKind::capacity, "crt_pmf: n = " + std::to_string(n) +
                                  " exceeds table capacity " +
                                  std::to_string(table.max_n()));
  }
  require(n >= 0, ErrorKind::invalid_parameter, "crt_pmf: n must be >= 0");
  require(std::isfinite(r) && r > 0.0, ErrorKind::invalid_parameter,
          "crt_pmf: r must be positive");
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  const double base = std::lgamma(r) - std::lgamma(n + r);
  for (int l = 0; l <= n; ++l) {
    const double ls = table.log_abs(n, l);
    if (ls == kNegInf) continue;
    pmf[static_cast<std::size_t>(l)] = std::exp(base + l * std::log(r) + ls);
  }
  return pmf;
}

double poisson_log_joint_pmf(int n, int l, double r, double p,
                             const StirlingTable& table) {
  const double ls = table.log_abs(n, l);
  if (ls == kNegInf) return 0.0;
  const double log_pn = n > 0 ? n * std::log(p) : 0.0;
  return std::exp(ls + l * std::log(r) + log_pn + r * std::log1p(-p) -
                  std::lgamma(n + 1.0));
}

}  // namespace pgbn

#include "pgbn/count_dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "pgbn/error.hpp"

namespace pgbn {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void check_positive(double v, const char* what) {
  if (!positive_finite(v)) {
    fail(ErrorKind::invalid_parameter,
         std::string(what) + " must be positive and finite, got " +
             std::to_string(v));
  }
}

// Marsaglia-Tsang for shape >= 1, unit scale.
double gamma_mt(double shape, Rng& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double sample_normal(Rng& rng) {
  // Marsaglia polar method; the second variate is discarded so that the
  // function stays stateless.
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double sample_gamma(double shape, double scale, Rng& rng) {
  check_positive(shape, "gamma shape");
  check_positive(scale, "gamma scale");
  double g = 0.0;
  if (shape >= 1.0) {
    g = gamma_mt(shape, rng);
  } else {
    g = gamma_mt(shape + 1.0, rng) * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  return std::max(g * scale, kGammaFloor);
}

double sample_log_gamma(double shape, Rng& rng) {
  check_positive(shape, "gamma shape");
  if (shape >= 1.0) return std::log(gamma_mt(shape, rng));
  const double g = gamma_mt(shape + 1.0, rng);
  return std::log(g) + std::log(rng.uniform_open()) / shape;
}

double sample_beta(double a, double b, Rng& rng) {
  const double la = sample_log_gamma(a, rng);
  const double lb = sample_log_gamma(b, rng);
  // a / (a + b) evaluated through the log ratio
  const double d = lb - la;
  if (d > 0.0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

Count sample_poisson(double mean, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    fail(ErrorKind::invalid_parameter,
         "poisson mean must be finite and non-negative, got " +
             std::to_string(mean));
  }
  if (mean == 0.0) return 0;
  std::poisson_distribution<Count> dist(mean);
  return dist(rng);
}

Count sample_binomial(Count n, double p, Rng& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<Count> dist(n, p);
  return dist(rng);
}

Count sample_crt(Count n, double r, Rng& rng) {
  check_positive(r, "CRT concentration");
  if (n < 0) fail(ErrorKind::invalid_parameter, "CRT count must be >= 0");
  Count tables = 0;
  for (Count i = 0; i < n; ++i) {
    // i is zero-based, so the success probability is r / (r + i)
    if (rng.uniform() * (r + static_cast<double>(i)) < r) ++tables;
  }
  return tables;
}

Count sample_log(double p, Rng& rng) {
  if (!(p > 0.0 && p < 1.0 - 1e-12)) {
    fail(ErrorKind::invalid_parameter,
         "logarithmic p must lie in (0, 1 - 1e-12), got " + std::to_string(p));
  }
  const double u = rng.uniform();
  double term = p / -std::log1p(-p);
  double cdf = term;
  Count k = 1;
  while (u >= cdf) {
    term *= p * static_cast<double>(k) / static_cast<double>(k + 1);
    ++k;
    const double next = cdf + term;
    if (next == cdf) break;  // tail below double resolution
    cdf = next;
  }
  return k;
}

Count sample_nb(double r, double p, Rng& rng) {
  check_positive(r, "NB shape");
  if (!(p >= 0.0 && p < 1.0)) {
    fail(ErrorKind::invalid_parameter,
         "NB probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (p == 0.0) return 0;
  const double lambda = sample_gamma(r, p / (1.0 - p), rng);
  return sample_poisson(lambda, rng);
}

CountPair poisson_log_pair(double r, double p, Rng& rng) {
  check_positive(r, "Poisson-logarithmic shape");
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::invalid_parameter,
         "Poisson-logarithmic p must lie in (0, 1), got " + std::to_string(p));
  }
  CountPair out;
  out.l = sample_poisson(-r * std::log1p(-p), rng);
  for (Count t = 0; t < out.l; ++t) out.n += sample_log(p, rng);
  return out;
}

void sample_dirichlet_into(std::span<const double> concentration,
                           std::span<double> out, Rng& rng) {
  require(concentration.size() == out.size(), ErrorKind::dimension,
          "dirichlet output size mismatch");
  require(!concentration.empty(), ErrorKind::invalid_parameter,
          "dirichlet needs at least one component");
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < concentration.size(); ++i) {
    check_positive(concentration[i], "dirichlet concentration");
    out[i] = sample_log_gamma(concentration[i], rng);
    max_log = std::max(max_log, out[i]);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - max_log);
    total += v;
  }
  for (double& v : out) v = std::max(v / total, kGammaFloor);
}

std::vector<double> sample_dirichlet(std::span<const double> concentration,
                                     Rng& rng) {
  std::vector<double> out(concentration.size());
  sample_dirichlet_into(concentration, out, rng);
  return out;
}

std::size_t sample_categorical(std::span<const double> weights, double total,
                               Rng& rng) {
  const double target = rng.uniform() * total;
  double cum = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    cum += weights[k];
    last_positive = k;
    if (cum > target) return k;
  }
  // rounding left the target at or beyond the final running sum
  return last_positive;
}

void multinomial_split_add(Count x, std::span<const double> weights,
                           std::span<Count> out, Rng& rng) {
  require(weights.size() == out.size(), ErrorKind::dimension,
          "multinomial output size mismatch");
  if (x < 0) fail(ErrorKind::invalid_parameter, "multinomial total must be >= 0");
  if (x == 0) return;
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorKind::invalid_parameter,
           "multinomial weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    fail(ErrorKind::degenerate_weights,
         "multinomial split of a positive count with all-zero weights");
  }
  if (x == 1) {
    out[sample_categorical(weights, total, rng)] += 1;
    return;
  }
  // conditional binomials against exact suffix sums, so the last positive
  // bucket receives probability one
  const std::size_t k_count = weights.size();
  std::vector<double> suffix(k_count + 1, 0.0);
  for (std::size_t k = k_count; k-- > 0;) suffix[k] = suffix[k + 1] + weights[k];
  Count remaining = x;
  for (std::size_t k = 0; k < k_count && remaining > 0; ++k) {
    if (weights[k] <= 0.0) continue;
    const double q = weights[k] / suffix[k];
    if (q >= 1.0 || suffix[k + 1] <= 0.0) {
      out[k] += remaining;
      remaining = 0;
      break;
    }
    const Count b = sample_binomial(remaining, q, rng);
    out[k] += b;
    remaining -= b;
  }
}

std::vector<Count> multinomial_split(Count x, std::span<const double> weights,
                                     Rng& rng) {
  std::vector<Count> out(weights.size(), 0);
  multinomial_split_add(x, weights, out, rng);
  return out;
}

}  // namespace pgbn

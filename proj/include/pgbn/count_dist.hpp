#pragma once

// Sampling kernels for the count distributions used by the augmentation
// scheme (CRT, logarithmic, negative binomial, Poisson-logarithmic), plus the
// continuous draws feeding them. Every function is pure given its Rng.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pgbn/rng.hpp"

namespace pgbn {

using Count = std::int64_t;

inline constexpr double kGammaFloor = 1e-300;

double sample_normal(Rng& rng);

// Gam(shape, scale). Shapes below 1 use Gam(a) = Gam(a + 1) * U^(1/a).
// The result is floored at kGammaFloor.
double sample_gamma(double shape, double scale, Rng& rng);

// log of a unit-scale gamma draw; stays finite when the draw itself would
// underflow (tiny shapes).
double sample_log_gamma(double shape, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

Count sample_poisson(double mean, Rng& rng);
Count sample_binomial(Count n, double p, Rng& rng);

// Sum of n Bernoulli(r / (r + i - 1)) draws, i = 1..n.
Count sample_crt(Count n, double r, Rng& rng);

// Logarithmic distribution on {1, 2, ...}, P(u) = p^u / (-ln(1-p) u).
Count sample_log(double p, Rng& rng);

// NB(r, p) as Pois(lambda), lambda ~ Gam(r, p / (1 - p)).
Count sample_nb(double r, double p, Rng& rng);

struct CountPair {
  Count n = 0;
  Count l = 0;
};

// l ~ Pois(-r ln(1 - p)), n = sum of l draws from Log(p).
CountPair poisson_log_pair(double r, double p, Rng& rng);

std::vector<double> sample_dirichlet(std::span<const double> concentration,
                                     Rng& rng);
void sample_dirichlet_into(std::span<const double> concentration,
                           std::span<double> out, Rng& rng);

std::vector<Count> multinomial_split(Count x, std::span<const double> weights,
                                     Rng& rng);
// Adds the split to `out` (callers accumulate into existing buffers).
void multinomial_split_add(Count x, std::span<const double> weights,
                           std::span<Count> out, Rng& rng);

// Cumulative-sum inversion; the first index whose running sum strictly
// exceeds u * total. Zero weights are never selected.
std::size_t sample_categorical(std::span<const double> weights, double total,
                               Rng& rng);

// Unsigned Stirling numbers of the first kind |s(n, l)|, held as logs.
class StirlingTable {
 public:
  static constexpr int kDefaultMaxN = 64;

  explicit StirlingTable(int max_n = kDefaultMaxN);

  int max_n() const noexcept { return max_n_; }
  // -inf where |s(n, l)| = 0.
  double log_abs(int n, int l) const;

 private:
  int max_n_;
  std::vector<double> log_entries_;  // row n holds l = 0..n
};

// P(l | n, r) = Gamma(r) r^l / Gamma(n + r) |s(n, l)| for l = 0..n.
std::vector<double> crt_pmf(int n, double r, const StirlingTable& table);

// P(n, l | r, p) = |s(n, l)| r^l p^n (1 - p)^r / n!
double poisson_log_joint_pmf(int n, int l, double r, double p,
                             const StirlingTable& table);

}  // namespace pgbn

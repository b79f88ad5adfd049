#pragma once

// stats.hpp -- sample statistics with jackknife errors, empirical CDF
// confidence bands, weighted log-log fits, and named deterministic RNG
// streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// One generator per (master seed, label, index).  The three parts are mixed
// into the seed sequence through 64-bit hashes, so any two streams that
// differ in label or index are seeded apart; everything downstream of a
// stream is reproducible across platforms (mt19937_64 and the sampling code
// below are fully pinned, no std::distribution involved).
class RngStream {
 public:
  RngStream(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
    const std::uint64_t h = fnv1a64(label);
    const std::uint64_t m = splitmix64(master ^ splitmix64(h + 0x632be59bd9b4e019ull * index));
    std::seed_seq seq{
        static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
        static_cast<std::uint32_t>(h),      static_cast<std::uint32_t>(h >> 32),
        static_cast<std::uint32_t>(index),  static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(m),      static_cast<std::uint32_t>(m >> 32)};
    gen_.seed(seq);
  }

  std::uint64_t raw() { return gen_(); }

  // uniform on (0,1), 53-bit resolution, never exactly 0 or 1
  double u01() { return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0); }

  // standard normal, Marsaglia polar method (kept out of std:: so the byte
  // stream does not depend on the standard library implementation)
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  void fill_normal(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = normal();
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

struct MeanEstimate {
  double value;
  double se;
  std::size_t n;
};

inline MeanEstimate mean_with_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("mean_with_se: need at least 2 samples");
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)), n};
}

struct VarianceEstimate {
  double value;  // unbiased (n-1 denominator)
  double se;     // leave-one-out jackknife standard error
  std::size_t n;
};

inline VarianceEstimate sample_variance(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need at least 2 samples");
  const double m = mean_of(xs);
  // centered sums keep the leave-one-out recomputation well conditioned
  double s1 = 0.0, s2 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    s1 += d;
    s2 += d * d;
  }
  const double var = s2 / static_cast<double>(n - 1);
  if (n == 2) return {var, var, n};  // jackknife degenerate; se of limited meaning

  const double nd = static_cast<double>(n);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = xs[i] - m;
    const double s1i = s1 - d;
    const double s2i = s2 - d * d;
    loo[i] = (s2i - s1i * s1i / (nd - 1.0)) / (nd - 2.0);
  }
  const double lm = mean_of(loo);
  double q = 0.0;
  for (double v : loo) q += (v - lm) * (v - lm);
  return {var, std::sqrt((nd - 1.0) / nd * q), n};
}

// Fraction of samples strictly greater than a; `sorted` must be ascending.
inline double empirical_tail(const std::vector<double>& sorted, double a) {
  auto it = std::upper_bound(sorted.begin(), sorted.end(), a);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

// Dvoretzky-Kiefer-Wolfowitz halfwidth: a level-`level` simultaneous band
// for the empirical CDF (and hence for empirical tails) of n iid samples.
inline double dkw_halfwidth(double level, std::size_t n) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("dkw_halfwidth: level in (0,1)");
  if (n == 0) throw std::invalid_argument("dkw_halfwidth: empty sample");
  return std::sqrt(std::log(2.0 / (1.0 - level)) / (2.0 * static_cast<double>(n)));
}

struct PowerLawFit {
  double slope;
  double intercept;
  double slope_se;
  double r2;
  std::size_t n;
};

// Weighted least squares of log(y) on log(x).  Weights are precision weights
// (1/variance of log y); pass all-ones for an unweighted fit.
inline PowerLawFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                              const std::vector<double>& ws) {
  const std::size_t n = xs.size();
  if (n < 3 || ys.size() != n || ws.size() != n)
    throw std::invalid_argument("loglog_fit: need >= 3 points with matching weights");
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw std::invalid_argument("loglog_fit: xs, ys must be positive");
    if (!(ws[i] >= 0.0)) throw std::invalid_argument("loglog_fit: weights must be nonnegative");
    wsum += ws[i];
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("loglog_fit: all weights zero");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += ws[i] * std::log(xs[i]);
    my += ws[i] * std::log(ys[i]);
  }
  mx /= wsum;
  my /= wsum;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(xs[i]) - mx;
    const double dy = std::log(ys[i]) - my;
    sxx += ws[i] * dx * dx;
    sxy += ws[i] * dx * dy;
    syy += ws[i] * dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("loglog_fit: degenerate abscissae");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssres = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (std::log(ys[i]) - my) - slope * (std::log(xs[i]) - mx);
    ssres += ws[i] * r * r;
  }
  const double r2 = (syy > 0.0) ? 1.0 - ssres / syy : 1.0;
  return {slope, intercept, std::sqrt(1.0 / sxx), r2, n};
}

}  // namespace mst

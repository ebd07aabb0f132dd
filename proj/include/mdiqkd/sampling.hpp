#pragma once

// Reproducible Monte-Carlo sampling of detection counts.
//
// std::mt19937_64 underneath. Uniform doubles take the top 53 bits. Binomial
// variates use sequential inversion when min(np, n(1-p)) < 10 and BTRD
// otherwise.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "errors.hpp"

namespace mdiqkd {

/// SplitMix64 finalizer, used to derive independent per-task seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t binomial(std::uint64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial probability must lie in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    const double nd = static_cast<double>(n);
    if (nd * p < 10.0) return inversion(n, p);
    return btrd(n, p);
  }

 private:
  std::uint64_t inversion(std::uint64_t n, double p) {
    const double nd = static_cast<double>(n);
    const double r = p / (1.0 - p);
    const double f0 = std::exp(nd * std::log1p(-p));
    while (true) {
      double u = uniform();
      double f = f0;
      std::uint64_t k = 0;
      bool exhausted = false;
      while (u > f) {
        u -= f;
        if (k == n || f == 0.0) {
          exhausted = true;  // rounding left u beyond the pmf; redraw
          break;
        }
        f *= r * (nd - static_cast<double>(k)) / static_cast<double>(k + 1);
        ++k;
      }
      if (!exhausted) return k;
    }
  }

  // log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(2 pi)/2]
  static double stirling_correction(double k) {
    static constexpr std::array<double, 10> table = {
        0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
        0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
        0.009255462182712733, 0.008330563433362871};
    if (k < 10.0) return table[static_cast<std::size_t>(k)];
    const double kp = k + 1.0;
    const double kp2 = kp * kp;
    return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp2) / kp2) / kp;
  }

  std::uint64_t btrd(std::uint64_t n, double p) {
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double m = std::floor((nd + 1.0) * p);
    const double r = p / q;
    const double nr = (nd + 1.0) * r;
    const double npq = nd * p * q;
    const double spq = std::sqrt(npq);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double vr = 0.92 - 4.2 / b;
    const double urvr = 0.86 * vr;

    while (true) {
      double v = uniform();
      double u;
      if (v <= urvr) {
        u = v / vr - 0.43;
        const double k = std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + c);
        if (k >= 0.0 && k <= nd) return static_cast<std::uint64_t>(k);
        continue;
      }
      if (v >= vr) {
        u = uniform() - 0.5;
      } else {
        u = v / vr - 0.93;
        u = std::copysign(0.5, u) - u;
        v = uniform() * vr;
      }
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + c);
      if (k < 0.0 || k > nd) continue;
      v = v * alpha / (a / (us * us) + b);
      const double km = std::abs(k - m);
      if (km <= 15.0) {
        // Recursive evaluation of f(k) / f(m).
        double f = 1.0;
        if (m < k) {
          for (double i = m + 1.0; i <= k; i += 1.0) f *= nr / i - r;
        } else if (m > k) {
          for (double i = k + 1.0; i <= m; i += 1.0) v *= nr / i - r;
        }
        if (v <= f) return static_cast<std::uint64_t>(k);
        continue;
      }
      // Squeeze on log f(k) / f(m).
      v = std::log(v);
      const double rho = (km / npq) * (((km / 3.0 + 0.625) * km + 1.0 / 6.0) / npq + 0.5);
      const double t = -km * km / (2.0 * npq);
      if (v < t - rho) return static_cast<std::uint64_t>(k);
      if (v > t + rho) continue;
      const double nm = nd - m + 1.0;
      const double h = (m + 0.5) * std::log((m + 1.0) / (r * nm)) + stirling_correction(m) +
                       stirling_correction(nd - m);
      const double nk = nd - k + 1.0;
      if (v <= h + (nd + 1.0) * std::log(nm / nk) + (k + 0.5) * std::log(nk * r / (k + 1.0)) -
                   stirling_correction(k) - stirling_correction(nd - k)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  std::mt19937_64 engine_;
};

}  // namespace mdiqkd

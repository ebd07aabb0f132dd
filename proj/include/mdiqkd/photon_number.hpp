#pragma once

// Photon-number decomposition of phase-randomized coherent states: each
// intensity pair is a Poisson mixture of i+j photon channels with yields
// Y_ij and error-yields e_ij*Y_ij.

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace mdiqkd {

inline constexpr int kDefaultCutoff = 7;

/// mu^i e^{-mu} / i!, with 0^0 = 1.
inline double poisson_weight(double mu, int i) {
  if (!(mu >= 0.0)) throw DomainError("poisson_weight requires mu >= 0");
  if (i < 0) throw DomainError("poisson_weight requires i >= 0");
  double w = std::exp(-mu);
  for (int n = 1; n <= i; ++n) w *= mu / n;
  return w;
}

/// Poisson probability of fewer than k photons.
inline double poisson_cdf_below(double mu, int k) {
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += poisson_weight(mu, i);
  return sum;
}

/// Upper bound on the dropped mass when photon numbers >= k are ignored on
/// both sides at a common intensity mu: 1 - (P[n < k])^2.
inline double truncation_bound(double mu, int k) {
  if (!(mu >= 0.0)) throw DomainError("truncation_bound requires mu >= 0");
  if (k < 1) throw DomainError("truncation_bound requires k >= 1");
  // The complement is summed directly so tiny tails keep full relative precision.
  double tail = 0.0;
  double w = poisson_weight(mu, k);
  for (int i = k; i < k + 400 && w > 0.0; ++i) {
    tail += w;
    if (w < 1e-18 * tail) break;
    w *= mu / (i + 1);
  }
  const double cdf = 1.0 - tail;
  return tail * (1.0 + cdf);  // 1 - cdf^2 = (1 - cdf)(1 + cdf)
}

/// Truncated k x k grid of yields and error-yields, row-major over (i, j):
/// i counts Alice's photons, j Bob's.
class YieldMatrix {
 public:
  explicit YieldMatrix(int cutoff = kDefaultCutoff)
      : cutoff_(cutoff) {
    if (cutoff < 2) throw ValidationError("photon-number cutoff must be at least 2");
    const auto n = static_cast<std::size_t>(cutoff) * static_cast<std::size_t>(cutoff);
    y_.assign(n, 0.0);
    b_.assign(n, 0.0);
  }

  int cutoff() const { return cutoff_; }
  std::size_t size() const { return y_.size(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cutoff_) + static_cast<std::size_t>(j);
  }

  double yield(int i, int j) const { return y_[index(i, j)]; }
  double error_yield(int i, int j) const { return b_[index(i, j)]; }

  void set_yield(int i, int j, double v) {
    check_unit(v);
    y_[index(i, j)] = v;
  }
  void set_error_yield(int i, int j, double v) {
    check_unit(v);
    b_[index(i, j)] = v;
  }

  void fill(double yield, double error_yield) {
    check_unit(yield);
    check_unit(error_yield);
    y_.assign(y_.size(), yield);
    b_.assign(b_.size(), error_yield);
  }

  // True when every error-yield is bounded by its yield.
  bool coupled() const {
    for (std::size_t n = 0; n < y_.size(); ++n) {
      if (b_[n] > y_[n]) return false;
    }
    return true;
  }

 private:
  static void check_unit(double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("yields must lie in [0,1]");
  }

  int cutoff_;
  std::vector<double> y_;
  std::vector<double> b_;
};

/// Joint Poisson coefficients mu^i nu^j e^{-mu-nu} / (i! j!) for i, j < cutoff,
/// in YieldMatrix order.
inline std::vector<double> joint_weights(double mu, double nu, int cutoff) {
  std::vector<double> wa(static_cast<std::size_t>(cutoff));
  std::vector<double> wb(static_cast<std::size_t>(cutoff));
  for (int i = 0; i < cutoff; ++i) {
    wa[static_cast<std::size_t>(i)] = poisson_weight(mu, i);
    wb[static_cast<std::size_t>(i)] = poisson_weight(nu, i);
  }
  std::vector<double> out;
  out.reserve(wa.size() * wb.size());
  for (double a : wa) {
    for (double b : wb) out.push_back(a * b);
  }
  return out;
}

inline double predicted_gain(const YieldMatrix& ym, double mu, double nu) {
  const auto w = joint_weights(mu, nu, ym.cutoff());
  double sum = 0.0;
  for (int i = 0; i < ym.cutoff(); ++i) {
    for (int j = 0; j < ym.cutoff(); ++j) sum += w[ym.index(i, j)] * ym.yield(i, j);
  }
  return sum;
}

inline double predicted_error_gain(const YieldMatrix& ym, double mu, double nu) {
  const auto w = joint_weights(mu, nu, ym.cutoff());
  double sum = 0.0;
  for (int i = 0; i < ym.cutoff(); ++i) {
    for (int j = 0; j < ym.cutoff(); ++j) sum += w[ym.index(i, j)] * ym.error_yield(i, j);
  }
  return sum;
}

}  // namespace mdiqkd

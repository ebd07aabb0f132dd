#pragma once

// Closed-form expected statistics of a normally operating MDI-QKD link
// (no eavesdropper): overall gains and QBERs of the mu/nu coherent-state
// channel in the x and z bases, and the yield/error of the single-photon
// pair channel. Used to generate "observed" data for simulation and the
// asymptotic reference curve.

#include <cmath>
#include <string>

#include "errors.hpp"

namespace mdiqkd {

// Error rate of a completely random outcome.
inline constexpr double kRandomError = 0.5;

struct ChannelParams {
  double eta_a = 0.1;   // Alice -> relay transmittance, detector loss absorbed
  double eta_b = 0.1;   // Bob -> relay transmittance
  double p_d = 3e-6;    // dark count probability per detector per gate
  double e_d = 0.015;   // misalignment error probability

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError(std::string("channel parameter ") + name + " must lie in [0,1]");
      }
    };
    unit(eta_a, "eta_a");
    unit(eta_b, "eta_b");
    unit(p_d, "p_d");
    unit(e_d, "e_d");
    if (!(e_d < 0.5)) throw DomainError("misalignment error e_d must be below 0.5");
  }
};

struct AuxVars {
  double x = 0.0;         // sqrt(eta_a mu eta_b nu) / 2
  double y = 1.0;         // (1 - p_d) exp(-(eta_a mu + eta_b nu) / 4)
  double mu_prime = 0.0;  // eta_a mu + eta_b nu
};

struct GainQber {
  double gain = 0.0;
  double qber = kRandomError;
};

struct SinglePhotonStats {
  double y11 = 0.0;
  double e11_x = kRandomError;
  double e11_z = kRandomError;
};

namespace detail {

inline void require_intensity(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " intensity must be finite and nonnegative");
  }
}

inline GainQber from_error_gain(double gain, double error_gain) {
  if (gain <= 0.0) return {0.0, kRandomError};
  return {gain, error_gain / gain};
}

// 1 - (1 - p_d) e^{-s}, without cancellation for small s and p_d.
inline double one_minus_keep_exp(double p_d, double s) { return -std::expm1(-s) + p_d * std::exp(-s); }

// Partial sums of the I0 series with leading terms removed:
// I0(z) - 1 and I0(2z) - 1 - 4 (I0(z) - 1), both nonnegative.
struct BesselExcess {
  double i0_m1 = 0.0;
  double i02_m1 = 0.0;
  double i02_excess = 0.0;
};

inline BesselExcess bessel_excess(double z) {
  BesselExcess out;
  const double q = 0.25 * z * z;
  if (q == 0.0) return out;
  double term = 1.0;  // q^k / (k!)^2
  double pow4 = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    pow4 *= 4.0;
    out.i0_m1 += term;
    out.i02_m1 += pow4 * term;
    if (k >= 2) out.i02_excess += (pow4 - 4.0) * term;
    if (pow4 * term < 1e-17 * out.i02_m1) break;
  }
  return out;
}

}  // namespace detail

/// Modified Bessel function of the first kind, order zero, by its ascending
/// series sum_k (z/2)^{2k} / (k!)^2. All terms are positive, so there is no
/// cancellation; the sum stops once a term falls below 1e-16 of the total.
inline double bessel_i0(double z) {
  if (!(z >= 0.0)) throw DomainError("bessel_i0 requires a nonnegative argument");
  const double q = 0.25 * z * z;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

inline AuxVars aux_vars(const ChannelParams& ch, double mu, double nu) {
  detail::require_intensity(mu, "mu");
  detail::require_intensity(nu, "nu");
  const double a = ch.eta_a * mu;
  const double b = ch.eta_b * nu;
  return {0.5 * std::sqrt(a * b), (1.0 - ch.p_d) * std::exp(-0.25 * (a + b)), a + b};
}

/// Gain and QBER when both parties encode in the x basis (relative phase).
inline GainQber gain_qber_x(const ChannelParams& ch, double mu, double nu) {
  ch.validate();
  const AuxVars v = aux_vars(ch, mu, nu);
  const double y2 = v.y * v.y;
  // 1 + 2y^2 - 4y I0(x) + I0(2x) regrouped into nonnegative terms.
  const double d = detail::one_minus_keep_exp(ch.p_d, 0.25 * v.mu_prime);
  const detail::BesselExcess be = detail::bessel_excess(v.x);
  const double gain = 2.0 * y2 * (2.0 * d * d + 4.0 * d * be.i0_m1 + be.i02_excess);
  const double error_gain = kRandomError * gain - 2.0 * (kRandomError - ch.e_d) * y2 * be.i02_m1;
  return detail::from_error_gain(gain, error_gain);
}

/// Gain and QBER when both parties encode in the z basis. Alice's intensity
/// is mu and Bob's is nu throughout.
inline GainQber gain_qber_z(const ChannelParams& ch, double mu, double nu) {
  ch.validate();
  const AuxVars v = aux_vars(ch, mu, nu);
  const double keep = 1.0 - ch.p_d;
  const double common = 2.0 * keep * keep * std::exp(-0.5 * v.mu_prime);
  const double correct = common * detail::one_minus_keep_exp(ch.p_d, 0.5 * ch.eta_a * mu) *
                         detail::one_minus_keep_exp(ch.p_d, 0.5 * ch.eta_b * nu);
  const double wrong = ch.p_d * common *
                       (detail::bessel_excess(2.0 * v.x).i0_m1 + detail::one_minus_keep_exp(ch.p_d, 0.5 * v.mu_prime));
  const double gain = correct + wrong;
  // e_d C + (1 - e_d) E, written so that C == E gives exactly half the gain.
  return detail::from_error_gain(gain, kRandomError * gain - (kRandomError - ch.e_d) * (correct - wrong));
}

inline GainQber gain_qber(const ChannelParams& ch, char basis, double mu, double nu) {
  if (basis == 'x') return gain_qber_x(ch, mu, nu);
  if (basis == 'z') return gain_qber_z(ch, mu, nu);
  throw ValidationError(std::string("unknown basis '") + basis + "'");
}

/// Yield and error rates of the single-photon pair channel without an eavesdropper.
inline SinglePhotonStats single_photon_stats(const ChannelParams& ch) {
  ch.validate();
  const double ea = ch.eta_a;
  const double eb = ch.eta_b;
  const double pd = ch.p_d;
  const double keep2 = (1.0 - pd) * (1.0 - pd);
  const double half_prod = 0.5 * ea * eb;
  const double y11 =
      keep2 * (half_prod + (2.0 * ea + 2.0 * eb - 3.0 * ea * eb) * pd + 4.0 * (1.0 - ea) * (1.0 - eb) * pd * pd);
  if (y11 <= 0.0) return {0.0, kRandomError, kRandomError};
  const double bias = kRandomError - ch.e_d;
  const double ey_x = kRandomError * y11 - bias * keep2 * half_prod;
  const double ey_z = kRandomError * y11 - bias * keep2 * (1.0 - 2.0 * pd) * half_prod;
  return {y11, ey_x / y11, ey_z / y11};
}

/// Probability that both parties emit exactly one photon and the relay succeeds.
inline double q11(double mu, double nu, double y11) {
  return mu * nu * std::exp(-mu - nu) * y11;
}

}  // namespace mdiqkd

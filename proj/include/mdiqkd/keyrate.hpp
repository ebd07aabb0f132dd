#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace mdiqkd {

struct KeyRateInputs {
  double q11_z = 0.0;    // lower bound on the single-photon-pair gain, z basis
  double e11_x = 0.5;    // upper bound on the phase error (x-basis single-photon error)
  double gain_z = 0.0;   // observed signal-pair z-basis gain
  double qber_z = 0.0;   // observed signal-pair z-basis QBER
  double f_ec = 1.16;    // error-correction inefficiency

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(name) + " must lie in [0,1]");
    };
    unit(q11_z, "q11_z");
    unit(e11_x, "e11_x");
    unit(gain_z, "gain_z");
    unit(qber_z, "qber_z");
    if (!(f_ec >= 1.0) || !std::isfinite(f_ec)) throw DomainError("f_ec must be >= 1");
  }
};

struct KeyRate {
  double rate = 0.0;        // max(0, raw)
  double raw = 0.0;         // may be negative
  double privacy_term = 0.0;
  double error_correction = 0.0;
  bool phase_error_saturated = false;  // e11_x >= 1/2: no privacy left
};

/// Binary Shannon entropy in bits, 0 log 0 = 0.
inline double binary_entropy(double e) {
  if (!(e >= 0.0 && e <= 1.0)) throw DomainError("binary_entropy requires e in [0,1]");
  if (e == 0.0 || e == 1.0) return 0.0;
  return -e * std::log2(e) - (1.0 - e) * std::log2(1.0 - e);
}

/// Secret key bits per signal-pair pulse from the single-photon-pair gain
/// and phase error, minus the error-correction leakage on the signal pair.
inline KeyRate key_rate(const KeyRateInputs& in) {
  in.validate();
  KeyRate out;
  const double e = std::min(in.e11_x, 0.5);
  out.phase_error_saturated = in.e11_x >= 0.5;
  out.privacy_term = in.q11_z * (1.0 - binary_entropy(e));
  out.error_correction = in.gain_z * in.f_ec * binary_entropy(in.qber_z);
  out.raw = out.privacy_term - out.error_correction;
  out.rate = std::max(0.0, out.raw);
  return out;
}

/// Two-sided Gaussian tail mass beyond n_alpha standard deviations.
inline double failure_probability(double n_alpha) {
  if (!(n_alpha >= 0.0)) throw DomainError("failure_probability requires n_alpha >= 0");
  return std::erfc(n_alpha / std::sqrt(2.0));
}

}  // namespace mdiqkd

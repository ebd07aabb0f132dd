#pragma once

// Scenario execution: simulate or ingest observations, estimate decoy
// bounds, compute key rates, sweep over channel loss, and emit CSV/text.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "channel_model.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "format.hpp"
#include "keyrate.hpp"
#include "sampling.hpp"
#include "scenario.hpp"

namespace mdiqkd {

/// Observed statistics for every (basis, k, l). Analytic mode reports the
/// model expectations as rates; sampled mode draws successes ~ Bin(N, Q) and
/// errors ~ Bin(successes, E) in the fixed order x then z, k, l ascending.
inline ObservedStats simulate_observed(const Scenario& s, const ChannelParams& ch, std::uint64_t seed) {
  s.protocol.validate();
  ch.validate();
  const auto& ia = s.protocol.intensities_a;
  const auto& ib = s.protocol.intensities_b;
  Rng rng(seed);
  ObservedStats obs;
  for (Basis b : {Basis::kX, Basis::kZ}) {
    const std::uint64_t n = s.protocol.pulses(b);
    for (std::size_t k = 0; k < ia.size(); ++k) {
      for (std::size_t l = 0; l < ib.size(); ++l) {
        const GainQber expected = gain_qber(ch, basis_char(b), ia[k], ib[l]);
        ObservedEntry e{b, static_cast<int>(k), static_cast<int>(l), ia[k], ib[l], n, expected.gain, expected.qber};
        if (s.mode == DataMode::kSampled) {
          const std::uint64_t successes = rng.binomial(n, expected.gain);
          const std::uint64_t errors = rng.binomial(successes, expected.qber);
          e.gain = static_cast<double>(successes) / static_cast<double>(n);
          e.qber = successes == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(successes);
        }
        obs.add(e);
      }
    }
  }
  return obs;
}

inline ObservedStats simulate_observed(const Scenario& s) { return simulate_observed(s, s.channel, s.seed); }

struct KeyRateReport {
  std::string source;  // where the observations came from
  ObservedStats observed;
  FluctuationConfig config;
  DecoyBounds bounds;

  int signal_k = 0;
  int signal_l = 0;
  double signal_mu = 0.0;
  double signal_nu = 0.0;
  double q11_z_lower = 0.0;
  double gain_z = 0.0;
  double qber_z = 0.0;
  double f_ec = 1.16;
  KeyRate finite;
  double failure_probability = 1.0;

  // Present when the channel is known (simulated data).
  std::optional<ChannelParams> channel;
  std::optional<SinglePhotonStats> truth;
  std::optional<KeyRate> asymptotic;
};

/// Reference rate with the exact single-photon statistics and expected signal data.
inline KeyRate asymptotic_rate(const ChannelParams& ch, double mu, double nu, double f_ec) {
  const SinglePhotonStats t = single_photon_stats(ch);
  const GainQber sig = gain_qber_z(ch, mu, nu);
  return key_rate({q11(mu, nu, t.y11), t.e11_x, sig.gain, sig.qber, f_ec});
}

/// Estimates bounds from `obs` and turns them into a key rate. The signal
/// pair is the scenario's (default: strongest intensity present in the z data).
inline KeyRateReport report_from_observed(const ObservedStats& obs, const Scenario& s, std::string source,
                                          std::optional<ChannelParams> channel) {
  KeyRateReport r;
  r.source = std::move(source);
  r.observed = obs;
  r.config = s.fluctuation();
  r.f_ec = s.protocol.f_ec;
  r.failure_probability = failure_probability(r.config.n_alpha);

  int max_k = -1;
  int max_l = -1;
  for (const ObservedEntry& e : obs.in_basis(Basis::kZ)) {
    max_k = std::max(max_k, e.k);
    max_l = std::max(max_l, e.l);
  }
  r.signal_k = s.protocol.signal_a.value_or(max_k);
  r.signal_l = s.protocol.signal_b.value_or(max_l);
  const ObservedEntry* sig = obs.find(Basis::kZ, r.signal_k, r.signal_l);
  if (sig == nullptr) {
    throw ValidationError("no z-basis observation for the signal pair (" + std::to_string(r.signal_k) + "," +
                          std::to_string(r.signal_l) + ")");
  }
  r.signal_mu = sig->mu;
  r.signal_nu = sig->nu;
  r.gain_z = sig->gain;
  r.qber_z = sig->qber;

  r.bounds = estimate(obs, r.config);
  if (!r.bounds.feasible()) {
    std::string which;
    for (const auto& name : r.bounds.infeasible_bounds()) which += (which.empty() ? "" : ", ") + name;
    throw InfeasibleError("observed statistics admit no photon-number channel (" + which + ")");
  }
  r.q11_z_lower = q11(r.signal_mu, r.signal_nu, r.bounds.y11_z_lower.value);
  r.finite = key_rate({r.q11_z_lower, r.bounds.e11_x_upper, r.gain_z, r.qber_z, r.f_ec});

  if (channel) {
    r.channel = channel;
    r.truth = single_photon_stats(*channel);
    r.asymptotic = asymptotic_rate(*channel, r.signal_mu, r.signal_nu, r.f_ec);
  }
  return r;
}

inline std::string describe_source(const Scenario& s, std::uint64_t seed) {
  return s.mode == DataMode::kAnalytic ? std::string("analytic model expectations")
                                       : "binomial sample, seed " + std::to_string(seed);
}

inline KeyRateReport run_point(const Scenario& s) {
  s.validate();
  return report_from_observed(simulate_observed(s), s, describe_source(s, s.seed), s.channel);
}

inline KeyRateReport run_counts(const ObservedStats& obs, const Scenario& s, const std::string& path) {
  s.validate();
  return report_from_observed(obs, s, "counts file " + path, std::nullopt);
}

struct SweepPoint {
  double total_loss_db = 0.0;
  double eta_a = 1.0;
  double eta_b = 1.0;
  double rate_asymptotic = 0.0;
  double rate_nalpha0 = 0.0;
  double rate_finite = 0.0;
  double raw_finite = 0.0;
  DecoyBounds bounds;  // at the configured n_alpha
  std::string error;   // nonempty when this point failed
};

inline SweepPoint sweep_point(const Scenario& s, double loss_db, std::size_t index) {
  SweepPoint p;
  p.total_loss_db = loss_db;
  const double asym = s.sweep ? s.sweep->asymmetry_db : 0.0;
  std::tie(p.eta_a, p.eta_b) = split_loss(loss_db, asym);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  p.rate_asymptotic = p.rate_nalpha0 = p.rate_finite = p.raw_finite = nan;
  try {
    ChannelParams ch = s.channel;
    ch.eta_a = p.eta_a;
    ch.eta_b = p.eta_b;
    const std::uint64_t seed = splitmix64(s.seed + index);
    const ObservedStats obs = simulate_observed(s, ch, seed);
    const KeyRateReport finite = report_from_observed(obs, s, describe_source(s, seed), ch);
    Scenario exact = s;
    exact.protocol.n_alpha = 0.0;
    const KeyRateReport zero = report_from_observed(obs, exact, describe_source(s, seed), ch);
    p.rate_asymptotic = finite.asymptotic->rate;
    p.rate_finite = finite.finite.rate;
    p.raw_finite = finite.finite.raw;
    p.rate_nalpha0 = zero.finite.rate;
    p.bounds = finite.bounds;
  } catch (const std::exception& e) {
    p.error = e.what();
  }
  return p;
}

/// One point per grid entry; points run in parallel, results are ordered by grid index.
inline std::vector<SweepPoint> run_sweep(const Scenario& s, const std::vector<double>& loss_grid,
                                         unsigned threads = 0) {
  s.validate();
  if (loss_grid.empty()) throw ValidationError("loss grid is empty");
  for (double db : loss_grid) {
    if (!(db >= 0.0) || !std::isfinite(db)) throw ValidationError("losses must be finite and >= 0 dB");
  }
  std::vector<SweepPoint> out(loss_grid.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(loss_grid.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < loss_grid.size(); i = next++) out[i] = sweep_point(s, loss_grid[i], i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return out;
}

inline std::vector<SweepPoint> run_sweep(const Scenario& s) {
  return run_sweep(s, s.sweep.value_or(LossSweep{}).grid());
}

enum class Curve { kAsymptotic, kNAlphaZero, kFinite };

/// Largest grid loss with a strictly positive rate on `curve`, if any.
inline std::optional<double> max_tolerable_loss(const std::vector<SweepPoint>& pts, Curve curve) {
  std::optional<double> best;
  for (const SweepPoint& p : pts) {
    const double r = curve == Curve::kAsymptotic ? p.rate_asymptotic
                     : curve == Curve::kNAlphaZero ? p.rate_nalpha0
                                                   : p.rate_finite;
    if (r > 0.0) best = std::max(best.value_or(p.total_loss_db), p.total_loss_db);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Output

inline void write_rates_csv(std::ostream& out, const ObservedStats& obs, bool qber) {
  out << "basis,k,l,mu,nu," << (qber ? "qber" : "gain") << '\n';
  for (const auto& [key, e] : obs.entries()) {
    out << basis_char(e.basis) << ',' << e.k << ',' << e.l << ',' << format_number(e.mu) << ','
        << format_number(e.nu) << ',' << format_number(qber ? e.qber : e.gain) << '\n';
  }
}

inline void write_gains_csv(std::ostream& out, const ObservedStats& obs) { write_rates_csv(out, obs, false); }
inline void write_qbers_csv(std::ostream& out, const ObservedStats& obs) { write_rates_csv(out, obs, true); }

inline void write_bounds_csv(std::ostream& out, const KeyRateReport& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto& b = r.bounds;
  const double y_true = r.truth ? r.truth->y11 : nan;
  auto row = [&](char basis, const char* q, double lo, double hi, double truth) {
    out << basis << ',' << q << ',' << format_number(lo) << ',' << format_number(hi) << ','
        << format_number(truth) << '\n';
  };
  out << "basis,quantity,lower,upper,asymptotic\n";
  row('z', "y11", b.y11_z_lower.value, b.y11_z_upper.value, y_true);
  row('z', "ey11", b.ey11_z_lower.value, b.ey11_z_upper.value, r.truth ? r.truth->e11_z * y_true : nan);
  row('z', "e11", b.e11_z_lower, b.e11_z_upper, r.truth ? r.truth->e11_z : nan);
  row('x', "y11", b.y11_x_lower.value, b.y11_x_upper.value, y_true);
  row('x', "ey11", b.ey11_x_lower.value, b.ey11_x_upper.value, r.truth ? r.truth->e11_x * y_true : nan);
  row('x', "e11", b.e11_x_lower, b.e11_x_upper, r.truth ? r.truth->e11_x : nan);
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& pts) {
  out << "loss_db,eta_a,eta_b,rate_asymptotic,rate_nalpha0,rate_finite,y11_z_lower,e11_x_upper\n";
  for (const SweepPoint& p : pts) {
    const bool ok = p.error.empty();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << format_number(p.total_loss_db) << ',' << format_number(p.eta_a) << ',' << format_number(p.eta_b) << ','
        << format_number(p.rate_asymptotic) << ',' << format_number(p.rate_nalpha0) << ','
        << format_number(p.rate_finite) << ',' << format_number(ok ? p.bounds.y11_z_lower.value : nan) << ','
        << format_number(ok ? p.bounds.e11_x_upper : nan) << '\n';
  }
}

namespace detail {

inline std::string sci(double v, int digits = 5) {
  if (std::isnan(v)) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return buf;
}

inline std::string pct(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f%%", 100.0 * v);
  return buf;
}

}  // namespace detail

inline void write_report(std::ostream& out, const KeyRateReport& r) {
  using detail::pct;
  using detail::sci;
  const auto& b = r.bounds;
  out << "MDI-QKD decoy-state finite-data analysis\n";
  out << "=======================================\n\n";
  out << "observations     : " << r.source << " (" << r.observed.size() << " entries)\n";
  if (r.channel) {
    out << "channel          : eta_a=" << sci(r.channel->eta_a) << " eta_b=" << sci(r.channel->eta_b)
        << " p_d=" << sci(r.channel->p_d) << " e_d=" << pct(r.channel->e_d) << '\n';
  }
  out << "n_alpha          : " << r.config.n_alpha << " (failure probability " << sci(r.failure_probability, 3)
      << ")\n";
  out << "photon cutoff    : " << r.config.cutoff << (r.config.rigorous_tail ? " (tail-relaxed)" : "")
      << (r.config.coupled ? ", coupled LP" : ", decoupled LPs") << "\n\n";

  out << "single-photon-pair bounds\n";
  out << "  basis  quantity  lower         upper         asymptotic\n";
  const double yt = r.truth ? r.truth->y11 : std::numeric_limits<double>::quiet_NaN();
  out << "  z      Y11       " << sci(b.y11_z_lower.value) << "   " << sci(b.y11_z_upper.value) << "   " << sci(yt)
      << '\n';
  out << "  z      e11       " << pct(b.e11_z_lower) << "      " << pct(b.e11_z_upper) << "      "
      << (r.truth ? pct(r.truth->e11_z) : "n/a") << '\n';
  out << "  x      Y11       " << sci(b.y11_x_lower.value) << "   " << sci(b.y11_x_upper.value) << "   " << sci(yt)
      << '\n';
  out << "  x      e11       " << pct(b.e11_x_lower) << "      " << pct(b.e11_x_upper) << "      "
      << (r.truth ? pct(r.truth->e11_x) : "n/a") << '\n';
  if (b.vacuous) out << "  WARNING: bounds are vacuous (too few distinct intensities or zero yield bound)\n";
  out << '\n';

  out << "key rate (bits per pulse pair in the signal z-basis channel)\n";
  out << "  signal pair         : mu=" << r.signal_mu << " nu=" << r.signal_nu << " (k=" << r.signal_k
      << ", l=" << r.signal_l << ")\n";
  out << "  signal gain / QBER  : " << sci(r.gain_z) << " / " << pct(r.qber_z) << '\n';
  out << "  Q11 lower bound     : " << sci(r.q11_z_lower) << '\n';
  out << "  privacy term        : " << sci(r.finite.privacy_term) << '\n';
  out << "  error correction    : " << sci(r.finite.error_correction) << " (f=" << r.f_ec << ")\n";
  out << "  raw rate            : " << sci(r.finite.raw) << '\n';
  out << "  key rate            : " << sci(r.finite.rate, 3) << (r.finite.phase_error_saturated ? " (phase error saturated)" : "")
      << '\n';
  if (r.asymptotic) out << "  asymptotic rate     : " << sci(r.asymptotic->rate, 3) << '\n';
}

inline void write_sweep_report(std::ostream& out, const Scenario& s, const std::vector<SweepPoint>& pts) {
  out << "MDI-QKD key rate versus total channel loss\n";
  out << "==========================================\n\n";
  out << "points: " << pts.size() << ", n_alpha: " << s.protocol.n_alpha << ", mode: "
      << (s.mode == DataMode::kAnalytic ? "analytic" : "sampled") << "\n\n";
  auto line = [&](const char* name, Curve c) {
    const auto v = max_tolerable_loss(pts, c);
    out << "  max tolerable loss, " << name << ": " << (v ? format_number(*v) + " dB" : std::string("none")) << '\n';
  };
  line("asymptotic     ", Curve::kAsymptotic);
  line("n_alpha = 0    ", Curve::kNAlphaZero);
  line("n_alpha = conf.", Curve::kFinite);
  for (const SweepPoint& p : pts) {
    if (!p.error.empty()) out << "  point " << format_number(p.total_loss_db) << " dB failed: " << p.error << '\n';
  }
}

}  // namespace mdiqkd

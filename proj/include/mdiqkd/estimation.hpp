#pragma once

// Decoy-state parameter estimation under statistical fluctuations.
//
// Every observed (intensity pair, basis) entry contributes a two-sided band
//   Q(1 - beta_q) <= sum_ij w_ij(mu, nu) Y_ij <= Q(1 + beta_q)
// on the photon-number yields (and the same with E*Q, beta_eq on the
// error-yields). Linear programs over the truncated yield grid then bound
// the single-photon-pair yield Y11 and error-yield e11*Y11.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "lp_solver.hpp"
#include "photon_number.hpp"

namespace mdiqkd {

enum class Basis { kX, kZ };

inline char basis_char(Basis b) { return b == Basis::kX ? 'x' : 'z'; }

inline Basis parse_basis(char c) {
  if (c == 'x') return Basis::kX;
  if (c == 'z') return Basis::kZ;
  throw ValidationError(std::string("basis must be 'x' or 'z', got '") + c + "'");
}

struct ObservedEntry {
  Basis basis = Basis::kZ;
  int k = 0;  // Alice's intensity index
  int l = 0;  // Bob's intensity index
  double mu = 0.0;
  double nu = 0.0;
  std::uint64_t pulses = 0;
  double gain = 0.0;
  double qber = 0.0;

  double success_count() const { return static_cast<double>(pulses) * gain; }
  double error_count() const { return static_cast<double>(pulses) * gain * qber; }
};

/// Observed gains and QBERs keyed by (basis, k, l).
class ObservedStats {
 public:
  using Key = std::tuple<Basis, int, int>;

  void add(const ObservedEntry& e) {
    if (e.k < 0 || e.l < 0) throw ValidationError("intensity indices must be nonnegative");
    if (!(e.mu >= 0.0) || !(e.nu >= 0.0)) throw ValidationError("intensities must be nonnegative");
    if (e.pulses == 0) throw ValidationError("pulse count must be positive");
    if (!(e.gain >= 0.0 && e.gain <= 1.0)) throw ValidationError("gain must lie in [0,1]");
    if (!(e.qber >= 0.0 && e.qber <= 1.0)) throw ValidationError("qber must lie in [0,1]");
    const Key key{e.basis, e.k, e.l};
    if (entries_.count(key) != 0) {
      throw ValidationError("duplicate observation for " + key_name(key));
    }
    entries_.emplace(key, e);
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::map<Key, ObservedEntry>& entries() const { return entries_; }

  const ObservedEntry* find(Basis b, int k, int l) const {
    const auto it = entries_.find(Key{b, k, l});
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::vector<ObservedEntry> in_basis(Basis b) const {
    std::vector<ObservedEntry> out;
    for (const auto& [key, e] : entries_) {
      if (std::get<0>(key) == b) out.push_back(e);
    }
    return out;
  }

  static std::string key_name(const Key& key) {
    return std::string("(") + basis_char(std::get<0>(key)) + "," + std::to_string(std::get<1>(key)) + "," +
           std::to_string(std::get<2>(key)) + ")";
  }

 private:
  std::map<Key, ObservedEntry> entries_;
};

struct FluctuationConfig {
  double n_alpha = 5.0;       // standard deviations of the fluctuation band
  int cutoff = kDefaultCutoff;
  bool rigorous_tail = false; // relax lower bands by the dropped Poisson mass
  bool coupled = false;       // joint LP with e_ij Y_ij <= Y_ij

  void validate() const {
    if (!(n_alpha >= 0.0) || !std::isfinite(n_alpha)) throw ValidationError("n_alpha must be finite and >= 0");
    if (cutoff < 2) throw ValidationError("cutoff must be at least 2");
  }
};

struct FluctuationRatios {
  double beta_q = 0.0;
  double beta_eq = 0.0;
};

/// beta = n_alpha / sqrt(count). A zero count yields +inf (or 0 when
/// n_alpha = 0); callers route zero counts through the zero-count policy.
inline FluctuationRatios fluctuation_ratios(double pulses, double gain, double qber, double n_alpha) {
  if (!(pulses > 0.0)) throw ValidationError("pulse count must be positive");
  if (!(n_alpha >= 0.0)) throw ValidationError("n_alpha must be >= 0");
  auto ratio = [n_alpha](double count) {
    if (n_alpha == 0.0) return 0.0;
    if (count <= 0.0) return std::numeric_limits<double>::infinity();
    return n_alpha / std::sqrt(count);
  };
  return {ratio(pulses * gain), ratio(pulses * gain * qber)};
}

enum class BandKind { kGain, kErrorGain };
enum class Direction { kLower, kUpper };

/// Lower/upper rhs of one observation's band, before it is attached to coefficients.
struct Band {
  bool has_lower = true;
  double lower = 0.0;
  double upper = 0.0;
};

inline Band fluctuation_band(const ObservedEntry& e, BandKind kind, const FluctuationConfig& cfg) {
  const double n = static_cast<double>(e.pulses);
  const double value = kind == BandKind::kGain ? e.gain : e.gain * e.qber;
  const double count = n * value;
  if (count <= 0.0) {
    // Unobserved event: Poisson-style ceiling n_alpha^2 / N, exact zero at n_alpha = 0.
    if (cfg.n_alpha == 0.0) return {true, 0.0, 0.0};
    return {false, 0.0, cfg.n_alpha * cfg.n_alpha / n};
  }
  const FluctuationRatios betas = fluctuation_ratios(n, e.gain, e.qber, cfg.n_alpha);
  const double beta = kind == BandKind::kGain ? betas.beta_q : betas.beta_eq;
  Band band{true, std::max(0.0, value * (1.0 - beta)), value * (1.0 + beta)};
  if (cfg.rigorous_tail) {
    // Dropped terms can only remove mass from the truncated sum.
    const double dropped =
        1.0 - poisson_cdf_below(e.mu, cfg.cutoff) * poisson_cdf_below(e.nu, cfg.cutoff);
    band.lower = std::max(0.0, band.lower - dropped);
  }
  return band;
}

/// Gain (or error-gain) inequalities for one basis over the cutoff^2 grid
/// variables, row-major in (i, j), so Y11 is variable cutoff + 1. With
/// `offset`/`total_vars` the rows can be embedded in a larger LP.
inline std::vector<LinearConstraint> build_constraints(const ObservedStats& obs, const FluctuationConfig& cfg,
                                                       Basis basis, BandKind kind, std::size_t offset = 0,
                                                       std::size_t total_vars = 0) {
  if (obs.empty()) throw ValidationError("no observed statistics to build constraints from");
  cfg.validate();
  const std::size_t grid = static_cast<std::size_t>(cfg.cutoff) * static_cast<std::size_t>(cfg.cutoff);
  if (total_vars == 0) total_vars = offset + grid;
  std::vector<LinearConstraint> out;
  for (const ObservedEntry& e : obs.in_basis(basis)) {
    const std::vector<double> w = joint_weights(e.mu, e.nu, cfg.cutoff);
    std::vector<double> coeffs(total_vars, 0.0);
    for (std::size_t v = 0; v < grid; ++v) coeffs[offset + v] = w[v];
    const Band band = fluctuation_band(e, kind, cfg);
    if (band.has_lower) out.push_back({coeffs, Relation::kGreaterEqual, band.lower});
    out.push_back({std::move(coeffs), Relation::kLessEqual, band.upper});
  }
  return out;
}

struct BoundResult {
  LpStatus status = LpStatus::kInfeasible;
  double value = std::numeric_limits<double>::quiet_NaN();

  bool optimal() const { return status == LpStatus::kOptimal; }
};

enum class Target { kYield, kErrorYield };

namespace detail {

inline std::string describe_rows(const ObservedStats& obs, Basis basis) {
  std::string s;
  for (const ObservedEntry& e : obs.in_basis(basis)) {
    if (!s.empty()) s += ", ";
    s += ObservedStats::key_name({basis, e.k, e.l});
  }
  return s;
}

}  // namespace detail

/// Tightens [0,1] variable boxes with the bounds implied by each upper row
/// whose coefficients are all nonnegative: a_j x_j <= rhs. Small yields are
/// then solved on their natural scale instead of against a unit box.
inline void tighten_bounds(LinearProgram& lp) {
  lp.var_bounds.assign(lp.n_vars, VarBounds{});
  for (const auto& con : lp.constraints) {
    if (con.relation != Relation::kLessEqual) continue;
    bool nonneg = true;
    for (double a : con.coeffs) nonneg = nonneg && a >= 0.0;
    if (!nonneg) continue;
    for (std::size_t j = 0; j < lp.n_vars; ++j) {
      if (con.coeffs[j] > 0.0) lp.var_bounds[j].hi = std::min(lp.var_bounds[j].hi, con.rhs / con.coeffs[j]);
    }
  }
}

/// Assembles the LP that extremizes Y11 (or e11*Y11) in one basis.
/// Decoupled mode uses only the rows for the target's own variables;
/// coupled mode solves the joint system with e_ij Y_ij <= Y_ij.
inline LinearProgram estimation_program(const ObservedStats& obs, const FluctuationConfig& cfg, Basis basis,
                                        Target target, Direction direction) {
  cfg.validate();
  const std::size_t grid = static_cast<std::size_t>(cfg.cutoff) * static_cast<std::size_t>(cfg.cutoff);
  const std::size_t y11 = static_cast<std::size_t>(cfg.cutoff) + 1;
  LinearProgram lp;
  lp.sense = direction == Direction::kLower ? Sense::kMinimize : Sense::kMaximize;
  if (!cfg.coupled) {
    lp.n_vars = grid;
    lp.constraints = build_constraints(
        obs, cfg, basis, target == Target::kYield ? BandKind::kGain : BandKind::kErrorGain);
    lp.objective.assign(grid, 0.0);
    lp.objective[y11] = 1.0;
    tighten_bounds(lp);
    return lp;
  }
  lp.n_vars = 2 * grid;
  lp.constraints = build_constraints(obs, cfg, basis, BandKind::kGain, 0, 2 * grid);
  auto err = build_constraints(obs, cfg, basis, BandKind::kErrorGain, grid, 2 * grid);
  lp.constraints.insert(lp.constraints.end(), err.begin(), err.end());
  for (std::size_t v = 0; v < grid; ++v) {
    std::vector<double> c(2 * grid, 0.0);
    c[grid + v] = 1.0;
    c[v] = -1.0;
    lp.constraints.push_back({std::move(c), Relation::kLessEqual, 0.0});
  }
  lp.objective.assign(2 * grid, 0.0);
  lp.objective[(target == Target::kYield ? 0 : grid) + y11] = 1.0;
  tighten_bounds(lp);
  return lp;
}

inline BoundResult extremize(const ObservedStats& obs, const FluctuationConfig& cfg, Basis basis, Target target,
                             Direction direction) {
  if (obs.in_basis(basis).empty()) {
    // Nothing observed: every yield in [0,1] is consistent.
    return {LpStatus::kOptimal, direction == Direction::kLower ? 0.0 : 1.0};
  }
  const LpSolution sol = solve(estimation_program(obs, cfg, basis, target, direction));
  if (!sol.optimal()) return {};
  return {LpStatus::kOptimal, sol.objective_value};
}

/// Bound on Y11 in `basis`; throws InfeasibleError naming the observations
/// whose bands cannot be met simultaneously.
inline double bound_y11(const ObservedStats& obs, const FluctuationConfig& cfg, Basis basis, Direction direction) {
  const BoundResult r = extremize(obs, cfg, basis, Target::kYield, direction);
  if (!r.optimal()) {
    throw InfeasibleError(std::string("gain constraints in basis ") + basis_char(basis) +
                          " are inconsistent: " + detail::describe_rows(obs, basis));
  }
  return r.value;
}

inline double bound_ey11_upper(const ObservedStats& obs, const FluctuationConfig& cfg, Basis basis) {
  const BoundResult r = extremize(obs, cfg, basis, Target::kErrorYield, Direction::kUpper);
  if (!r.optimal()) {
    throw InfeasibleError(std::string("error-gain constraints in basis ") + basis_char(basis) +
                          " are inconsistent: " + detail::describe_rows(obs, basis));
  }
  return r.value;
}

struct DecoyBounds {
  BoundResult y11_z_lower, y11_z_upper;
  BoundResult y11_x_lower, y11_x_upper;
  BoundResult ey11_z_lower, ey11_z_upper;
  BoundResult ey11_x_lower, ey11_x_upper;

  // Derived error-rate bounds: error-yield bound divided by the opposite yield bound.
  double e11_x_lower = 0.0;
  double e11_x_upper = 1.0;
  double e11_z_lower = 0.0;
  double e11_z_upper = 1.0;
  bool vacuous = false;

  bool feasible() const {
    for (const BoundResult* b : {&y11_z_lower, &y11_z_upper, &y11_x_lower, &y11_x_upper, &ey11_z_lower,
                                 &ey11_z_upper, &ey11_x_lower, &ey11_x_upper}) {
      if (!b->optimal()) return false;
    }
    return true;
  }

  std::vector<std::string> infeasible_bounds() const {
    std::vector<std::string> out;
    const std::pair<const char*, const BoundResult*> all[] = {
        {"y11_z_lower", &y11_z_lower},   {"y11_z_upper", &y11_z_upper},   {"y11_x_lower", &y11_x_lower},
        {"y11_x_upper", &y11_x_upper},   {"ey11_z_lower", &ey11_z_lower}, {"ey11_z_upper", &ey11_z_upper},
        {"ey11_x_lower", &ey11_x_lower}, {"ey11_x_upper", &ey11_x_upper}};
    for (const auto& [name, b] : all) {
      if (!b->optimal()) out.emplace_back(name);
    }
    return out;
  }
};

namespace detail {

inline std::size_t distinct_intensities(const std::vector<ObservedEntry>& rows, bool alice) {
  std::set<int> idx;
  for (const ObservedEntry& e : rows) idx.insert(alice ? e.k : e.l);
  return idx.size();
}

// upper(error-yield) / lower(yield), saturating at 1.
inline double ratio_upper(double ey_upper, double y_lower, bool& vacuous) {
  if (ey_upper <= 0.0) return 0.0;
  if (y_lower <= 0.0) {
    vacuous = true;
    return 1.0;
  }
  return std::min(1.0, ey_upper / y_lower);
}

inline double ratio_lower(double ey_lower, double y_upper) {
  if (ey_lower <= 0.0 || y_upper <= 0.0) return 0.0;
  return std::min(1.0, ey_lower / y_upper);
}

}  // namespace detail

/// Runs all yield and error-yield programs for both bases.
inline DecoyBounds estimate(const ObservedStats& obs, const FluctuationConfig& cfg) {
  if (obs.empty()) throw ValidationError("no observed statistics to estimate from");
  cfg.validate();
  DecoyBounds d;
  d.y11_z_lower = extremize(obs, cfg, Basis::kZ, Target::kYield, Direction::kLower);
  d.y11_z_upper = extremize(obs, cfg, Basis::kZ, Target::kYield, Direction::kUpper);
  d.y11_x_lower = extremize(obs, cfg, Basis::kX, Target::kYield, Direction::kLower);
  d.y11_x_upper = extremize(obs, cfg, Basis::kX, Target::kYield, Direction::kUpper);
  d.ey11_z_lower = extremize(obs, cfg, Basis::kZ, Target::kErrorYield, Direction::kLower);
  d.ey11_z_upper = extremize(obs, cfg, Basis::kZ, Target::kErrorYield, Direction::kUpper);
  d.ey11_x_lower = extremize(obs, cfg, Basis::kX, Target::kErrorYield, Direction::kLower);
  d.ey11_x_upper = extremize(obs, cfg, Basis::kX, Target::kErrorYield, Direction::kUpper);
  if (!d.feasible()) return d;

  for (Basis b : {Basis::kX, Basis::kZ}) {
    const auto rows = obs.in_basis(b);
    if (detail::distinct_intensities(rows, true) < 2 || detail::distinct_intensities(rows, false) < 2) {
      d.vacuous = true;
    }
  }
  d.e11_x_upper = detail::ratio_upper(d.ey11_x_upper.value, d.y11_x_lower.value, d.vacuous);
  d.e11_z_upper = detail::ratio_upper(d.ey11_z_upper.value, d.y11_z_lower.value, d.vacuous);
  d.e11_x_lower = detail::ratio_lower(d.ey11_x_lower.value, d.y11_x_upper.value);
  d.e11_z_lower = detail::ratio_lower(d.ey11_z_lower.value, d.y11_z_upper.value);
  return d;
}

}  // namespace mdiqkd

#pragma once

// Scenario configuration: channel (single point or loss sweep), decoy
// protocol, estimation options and data mode. Loaded from JSON; unknown keys
// are rejected at every level, missing keys keep their defaults.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "channel_model.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "json.hpp"

namespace mdiqkd {

struct LossSweep {
  double loss_db_min = 0.0;
  double loss_db_max = 78.0;
  int points = 40;
  double asymmetry_db = 0.0;  // Bob's arm loss minus Alice's arm loss

  std::vector<double> grid() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      out.push_back(points == 1 ? loss_db_min
                                : loss_db_min + (loss_db_max - loss_db_min) * i / (points - 1));
    }
    return out;
  }

  void validate() const {
    if (points < 1) throw ValidationError("sweep needs at least one point");
    if (!(loss_db_min >= 0.0) || !(loss_db_max >= loss_db_min)) {
      throw ValidationError("sweep requires 0 <= loss_db_min <= loss_db_max");
    }
    if (!(std::abs(asymmetry_db) <= loss_db_min)) {
      throw ValidationError("sweep asymmetry cannot exceed the minimum total loss");
    }
  }
};

/// Arm transmittances for a total two-sided loss in dB, split so that Bob's
/// arm carries `asymmetry_db` more loss than Alice's.
inline std::pair<double, double> split_loss(double total_db, double asymmetry_db = 0.0) {
  const double a_db = 0.5 * (total_db - asymmetry_db);
  const double b_db = 0.5 * (total_db + asymmetry_db);
  return {std::pow(10.0, -a_db / 10.0), std::pow(10.0, -b_db / 10.0)};
}

struct DecoyProtocol {
  std::vector<double> intensities_a{0.0, 0.1, 0.5};
  std::vector<double> intensities_b{0.0, 0.1, 0.5};
  std::optional<int> signal_a;  // default: strongest intensity
  std::optional<int> signal_b;
  std::uint64_t n_data = 20'000'000'000ull;  // pulses per intensity pair, both bases
  double z_fraction = 0.5;                   // share of n_data sent in the z basis
  double n_alpha = 5.0;
  double f_ec = 1.16;

  int signal_index_a() const { return signal_a.value_or(static_cast<int>(intensities_a.size()) - 1); }
  int signal_index_b() const { return signal_b.value_or(static_cast<int>(intensities_b.size()) - 1); }

  std::uint64_t pulses(Basis b) const {
    const auto z = static_cast<std::uint64_t>(std::llround(static_cast<double>(n_data) * z_fraction));
    return b == Basis::kZ ? z : n_data - z;
  }

  void validate() const {
    auto check = [](const std::vector<double>& v, const char* who) {
      if (v.empty()) throw ValidationError(std::string(who) + " intensity list is empty");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
          throw ValidationError(std::string(who) + " intensities must be finite and nonnegative");
        }
        if (i > 0 && !(v[i] > v[i - 1])) {
          throw ValidationError(std::string(who) + " intensities must be strictly increasing");
        }
      }
    };
    check(intensities_a, "Alice");
    check(intensities_b, "Bob");
    if (signal_index_a() < 0 || signal_index_a() >= static_cast<int>(intensities_a.size())) {
      throw ValidationError("signal_a is out of range");
    }
    if (signal_index_b() < 0 || signal_index_b() >= static_cast<int>(intensities_b.size())) {
      throw ValidationError("signal_b is out of range");
    }
    if (!(z_fraction > 0.0 && z_fraction < 1.0)) throw ValidationError("z_fraction must lie in (0,1)");
    if (pulses(Basis::kZ) == 0 || pulses(Basis::kX) == 0) throw ValidationError("n_data too small to split over bases");
    if (!(n_alpha >= 0.0) || !std::isfinite(n_alpha)) throw ValidationError("n_alpha must be finite and >= 0");
    if (!(f_ec >= 1.0) || !std::isfinite(f_ec)) throw ValidationError("f_ec must be >= 1");
  }
};

enum class DataMode { kAnalytic, kSampled };

struct Scenario {
  ChannelParams channel;
  std::optional<LossSweep> sweep;
  DecoyProtocol protocol;
  FluctuationConfig estimation;  // n_alpha is mirrored from protocol
  DataMode mode = DataMode::kAnalytic;
  std::uint64_t seed = 0;

  FluctuationConfig fluctuation() const {
    FluctuationConfig cfg = estimation;
    cfg.n_alpha = protocol.n_alpha;
    return cfg;
  }

  void validate() const {
    channel.validate();
    if (sweep) sweep->validate();
    protocol.validate();
    fluctuation().validate();
  }

  // Vacuum + weak decoy with {0, 0.1, 0.5} on both sides, Table-1 channel at eta = 0.1.
  static Scenario vacuum_weak() { return Scenario{}; }

  static Scenario vacuum_two_weak() {
    Scenario s;
    s.protocol.intensities_a = {0.0, 0.1, 0.2, 0.5};
    s.protocol.intensities_b = {0.0, 0.1, 0.2, 0.5};
    return s;
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) throw ValidationError(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

template <typename T>
void read_number(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(std::string("'") + key + "' must be a number");
  if constexpr (std::is_integral_v<T>) {
    const double d = v.get<double>();
    if (v.is_number_integer() || v.is_number_unsigned()) {
      if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<std::int64_t>() < 0) {
        throw ValidationError(std::string("'") + key + "' must be nonnegative");
      }
      out = v.get<T>();
    } else if (d == std::floor(d) && d >= 0.0 && d < 1.8e19) {
      out = static_cast<T>(d);
    } else {
      throw ValidationError(std::string("'") + key + "' must be an integer");
    }
  } else {
    out = v.get<T>();
  }
}

inline void read_bool(const json& j, const char* key, bool& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_boolean()) throw ValidationError(std::string("'") + key + "' must be true or false");
  out = j.at(key).get<bool>();
}

inline std::vector<double> read_list(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw ValidationError(std::string("'") + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw ValidationError(std::string("'") + key + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::read_number;
  detail::reject_unknown(j, "scenario", {"channel", "protocol", "estimation", "mode", "seed"});
  Scenario s;
  if (j.contains("channel")) {
    const auto& c = j.at("channel");
    detail::reject_unknown(c, "channel", {"eta_a", "eta_b", "p_d", "e_d", "sweep"});
    read_number(c, "eta_a", s.channel.eta_a);
    read_number(c, "eta_b", s.channel.eta_b);
    read_number(c, "p_d", s.channel.p_d);
    read_number(c, "e_d", s.channel.e_d);
    if (c.contains("sweep")) {
      const auto& w = c.at("sweep");
      detail::reject_unknown(w, "channel.sweep", {"loss_db_min", "loss_db_max", "points", "asymmetry_db"});
      LossSweep sw;
      read_number(w, "loss_db_min", sw.loss_db_min);
      read_number(w, "loss_db_max", sw.loss_db_max);
      read_number(w, "points", sw.points);
      read_number(w, "asymmetry_db", sw.asymmetry_db);
      s.sweep = sw;
    }
  }
  if (j.contains("protocol")) {
    const auto& p = j.at("protocol");
    detail::reject_unknown(p, "protocol", {"intensities_a", "intensities_b", "signal_a", "signal_b", "n_data",
                                           "z_fraction", "n_alpha", "f_ec"});
    s.protocol.intensities_a = detail::read_list(p, "intensities_a", s.protocol.intensities_a);
    s.protocol.intensities_b = detail::read_list(p, "intensities_b", s.protocol.intensities_b);
    if (p.contains("signal_a")) {
      int v = 0;
      read_number(p, "signal_a", v);
      s.protocol.signal_a = v;
    }
    if (p.contains("signal_b")) {
      int v = 0;
      read_number(p, "signal_b", v);
      s.protocol.signal_b = v;
    }
    read_number(p, "n_data", s.protocol.n_data);
    read_number(p, "z_fraction", s.protocol.z_fraction);
    read_number(p, "n_alpha", s.protocol.n_alpha);
    read_number(p, "f_ec", s.protocol.f_ec);
  }
  if (j.contains("estimation")) {
    const auto& e = j.at("estimation");
    detail::reject_unknown(e, "estimation", {"cutoff", "rigorous_tail", "coupled"});
    read_number(e, "cutoff", s.estimation.cutoff);
    detail::read_bool(e, "rigorous_tail", s.estimation.rigorous_tail);
    detail::read_bool(e, "coupled", s.estimation.coupled);
  }
  if (j.contains("mode")) {
    const auto& m = j.at("mode");
    if (m == "analytic") {
      s.mode = DataMode::kAnalytic;
    } else if (m == "sampled") {
      s.mode = DataMode::kSampled;
    } else {
      throw ValidationError("mode must be \"analytic\" or \"sampled\"");
    }
  }
  read_number(j, "seed", s.seed);
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path);
  try {
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("scenario " + path + " is invalid: " + e.what());
  }
}

}  // namespace mdiqkd

#pragma once

// Counts CSV: the lab-facing exchange format for observed data.
//
//   basis,k,l,mu,nu,pulses,successes,errors
//   z,0,0,0.0,0.0,20000000000,720,360
//
// UTF-8, LF line endings, integer counts. Rates are recomputed from counts
// on ingestion (gain = successes/pulses, qber = errors/successes).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "estimation.hpp"
#include "format.hpp"

namespace mdiqkd {

inline constexpr std::string_view kCountsHeader = "basis,k,l,mu,nu,pulses,successes,errors";

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, const char* name, std::size_t line_no) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw ValidationError("row " + std::to_string(line_no) + ": field '" + name + "' is not a valid " +
                          (std::is_integral_v<T> ? "integer" : "number") + ": '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace detail

inline ObservedStats parse_counts(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ValidationError("counts file is empty");
  ++line_no;
  if (line != kCountsHeader) {
    throw ValidationError("row 1: header must be '" + std::string(kCountsHeader) + "'");
  }
  ObservedStats obs;
  std::map<std::pair<char, int>, double> intensity_of;  // ('a'|'b', index) -> intensity
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.back() == '\r') throw ValidationError("row " + std::to_string(line_no) + ": CR line ending");
    const auto f = detail::split_commas(line);
    if (f.size() != 8) {
      throw ValidationError("row " + std::to_string(line_no) + ": expected 8 fields, got " + std::to_string(f.size()));
    }
    if (f[0].size() != 1) throw ValidationError("row " + std::to_string(line_no) + ": basis must be x or z");
    ObservedEntry e;
    try {
      e.basis = parse_basis(f[0][0]);
    } catch (const ValidationError& err) {
      throw ValidationError("row " + std::to_string(line_no) + ": " + err.what());
    }
    e.k = detail::parse_field<int>(f[1], "k", line_no);
    e.l = detail::parse_field<int>(f[2], "l", line_no);
    e.mu = detail::parse_field<double>(f[3], "mu", line_no);
    e.nu = detail::parse_field<double>(f[4], "nu", line_no);
    e.pulses = detail::parse_field<std::uint64_t>(f[5], "pulses", line_no);
    const auto successes = detail::parse_field<std::uint64_t>(f[6], "successes", line_no);
    const auto errors = detail::parse_field<std::uint64_t>(f[7], "errors", line_no);
    const std::string at = "row " + std::to_string(line_no) + ": ";
    if (e.k < 0 || e.l < 0) throw ValidationError(at + "intensity indices must be nonnegative");
    if (!(e.mu >= 0.0) || !(e.nu >= 0.0) || !std::isfinite(e.mu) || !std::isfinite(e.nu)) {
      throw ValidationError(at + "intensities must be finite and nonnegative");
    }
    if (e.pulses == 0) throw ValidationError(at + "pulses must be positive");
    if (successes > e.pulses) throw ValidationError(at + "successes exceed pulses");
    if (errors > successes) throw ValidationError(at + "errors exceed successes");
    for (const auto& [party, idx, mu] : {std::tuple{'a', e.k, e.mu}, std::tuple{'b', e.l, e.nu}}) {
      const auto [it, inserted] = intensity_of.emplace(std::pair{party, idx}, mu);
      if (!inserted && it->second != mu) {
        throw ValidationError(at + "intensity index " + std::to_string(idx) + " of " +
                              (party == 'a' ? "Alice" : "Bob") + " maps to two different intensities");
      }
    }
    e.gain = static_cast<double>(successes) / static_cast<double>(e.pulses);
    e.qber = successes == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(successes);
    try {
      obs.add(e);
    } catch (const ValidationError& err) {
      throw ValidationError(at + err.what());
    }
  }
  if (obs.empty()) throw ValidationError("counts file has no data rows");
  return obs;
}

inline ObservedStats ingest_counts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open counts file " + path);
  return parse_counts(in);
}

/// Writes observations as integer counts (rates times pulses, rounded).
/// Stats that came from counts round-trip exactly.
inline void write_counts(std::ostream& out, const ObservedStats& obs) {
  out << kCountsHeader << '\n';
  for (const auto& [key, e] : obs.entries()) {
    const auto successes = static_cast<std::uint64_t>(std::llround(e.success_count()));
    const auto errors = static_cast<std::uint64_t>(std::llround(static_cast<double>(successes) * e.qber));
    out << basis_char(e.basis) << ',' << e.k << ',' << e.l << ',' << format_number(e.mu) << ','
        << format_number(e.nu) << ',' << e.pulses << ',' << successes << ',' << std::min(errors, successes) << '\n';
  }
}

}  // namespace mdiqkd

// mdiqkd: finite-data decoy-state MDI-QKD analysis from the command line.
//
//   mdiqkd simulate --config s.json --out dir      gains.csv qbers.csv counts.csv
//   mdiqkd estimate --config s.json [--counts c.csv]  bounds.csv report.txt
//   mdiqkd keyrate  --config s.json [--counts c.csv]  bounds.csv report.txt
//   mdiqkd sweep    --config s.json --out dir      sweep.csv report.txt
//
// Exit codes: 0 success, 2 validation error, 3 infeasible estimation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mdiqkd.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

struct Options {
  std::string config;
  std::string counts;
  std::string out = ".";
  std::optional<double> n_alpha;
  std::optional<int> cutoff;
  std::optional<std::uint64_t> seed;
  bool sampled = false;
};

mdiqkd::Scenario load(const Options& o) {
  mdiqkd::Scenario s = o.config.empty() ? mdiqkd::Scenario::vacuum_weak() : mdiqkd::load_scenario(o.config);
  if (o.n_alpha) s.protocol.n_alpha = *o.n_alpha;
  if (o.cutoff) s.estimation.cutoff = *o.cutoff;
  if (o.seed) s.seed = *o.seed;
  if (o.sampled) s.mode = mdiqkd::DataMode::kSampled;
  s.validate();
  return s;
}

std::ofstream open_out(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw mdiqkd::ValidationError("cannot write " + p.string());
  return f;
}

mdiqkd::KeyRateReport analyse(const Options& o) {
  const mdiqkd::Scenario s = load(o);
  if (o.counts.empty()) return mdiqkd::run_point(s);
  return mdiqkd::run_counts(mdiqkd::ingest_counts(o.counts), s, o.counts);
}

void cmd_simulate(const Options& o) {
  const mdiqkd::Scenario s = load(o);
  const mdiqkd::ObservedStats obs = mdiqkd::simulate_observed(s);
  auto gains = open_out(o, "gains.csv");
  mdiqkd::write_gains_csv(gains, obs);
  auto qbers = open_out(o, "qbers.csv");
  mdiqkd::write_qbers_csv(qbers, obs);
  auto counts = open_out(o, "counts.csv");
  mdiqkd::write_counts(counts, obs);
}

void cmd_estimate(const Options& o, bool with_rate) {
  const mdiqkd::KeyRateReport r = analyse(o);
  auto bounds = open_out(o, "bounds.csv");
  mdiqkd::write_bounds_csv(bounds, r);
  auto report = open_out(o, "report.txt");
  mdiqkd::write_report(report, r);
  if (with_rate) {
    std::cout << "key rate " << mdiqkd::format_number(r.finite.rate) << " bits/pulse\n";
  } else {
    std::cout << "y11_z_lower " << mdiqkd::format_number(r.bounds.y11_z_lower.value) << "\ne11_x_upper "
              << mdiqkd::format_number(r.bounds.e11_x_upper) << '\n';
  }
}

void cmd_sweep(const Options& o) {
  const mdiqkd::Scenario s = load(o);
  const auto pts = mdiqkd::run_sweep(s);
  auto sweep = open_out(o, "sweep.csv");
  mdiqkd::write_sweep_csv(sweep, pts);
  auto report = open_out(o, "report.txt");
  mdiqkd::write_sweep_report(report, s, pts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-data security analysis for decoy-state MDI-QKD"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub, bool counts) {
    sub->add_option("--config", o.config, "scenario JSON (defaults to the vacuum+weak scenario)");
    if (counts) sub->add_option("--counts", o.counts, "observed counts CSV instead of simulated data");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--n-alpha", o.n_alpha, "standard deviations of the fluctuation band");
    sub->add_option("--cutoff", o.cutoff, "photon-number cutoff");
    sub->add_option("--seed", o.seed, "seed for sampled mode");
    sub->add_flag("--sampled", o.sampled, "draw binomial counts instead of expectations");
  };
  auto* simulate = app.add_subcommand("simulate", "write expected or sampled gains, QBERs and counts");
  auto* estimate = app.add_subcommand("estimate", "bound Y11 and e11 by linear programming");
  auto* keyrate = app.add_subcommand("keyrate", "estimate bounds and compute the secret key rate");
  auto* sweep = app.add_subcommand("sweep", "key rate versus total channel loss");
  add_common(simulate, false);
  add_common(estimate, true);
  add_common(keyrate, true);
  add_common(sweep, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (simulate->parsed()) cmd_simulate(o);
    if (estimate->parsed()) cmd_estimate(o, false);
    if (keyrate->parsed()) cmd_estimate(o, true);
    if (sweep->parsed()) cmd_sweep(o);
  } catch (const mdiqkd::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const mdiqkd::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const mdiqkd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: vjlp_acceptance [scratch-dir] [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vjlp/config.hpp"
#include "vjlp/experiments.hpp"
#include "vjlp/validation.hpp"

using namespace vjlp;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::filesystem::path scratch = std::filesystem::temp_directory_path() / "vjlp_acceptance";

Outcome from_checks(const std::vector<CheckResult>& checks)
{
  Outcome o{true, {}};
  for (const auto& c : checks) {
    o.passed = o.passed && c.passed;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += (c.passed ? "" : "FAILED ") + c.name + ": " + c.detail;
  }
  return o;
}

Outcome psi_identity() { return from_checks({check_psi_identity(1000, 1)}); }

Outcome envelope_validity() { return from_checks({check_envelope(1000000, 2)}); }

Outcome thinning_exactness()
{
  const Preset torus = make_preset("torus1d");
  std::vector<CheckResult> checks;
  for (double rho : {-1.0, 0.0, 0.9})
    checks.push_back(check_thinning_vs_reference(torus, ActivationD::softplus(1.0), rho, 0.5, 100000, 3));
  return from_checks(checks);
}

Outcome invariance()
{
  std::vector<CheckResult> checks;
  for (const char* name : {"gaussian2d", "torus1d"})
    checks.push_back(check_stationarity(make_preset(name), ActivationD::softplus(1.0), 1.0, 0.0, 1000000, 4));
  return from_checks(checks);
}

Outcome invariant_moments()
{
  const Preset g = make_preset("gaussian2d");
  SchemeConfigD cfg;
  cfg.delta = 0.01;
  cfg.gamma = 1.0;
  cfg.rho = 0.0;
  const std::uint64_t steps = 10000000, burn = 1000;
  const StreamFamily streams(5);

  // y, y^2, v1, v1^2, v2, v2^2
  std::vector<BatchMeans> acc(6, BatchMeans(steps - burn));
  const Observer<double> observer = [&](std::uint64_t k, const PhaseStateD& s) {
    if (k <= burn) return;
    const double vals[6] = {s.x[1], s.x[1] * s.x[1], s.v[0], s.v[0] * s.v[0], s.v[1], s.v[1] * s.v[1]};
    for (int i = 0; i < 6; ++i) acc[i].push(vals[i]);
  };
  PhaseStateD s = initial_state(g, "gibbs", streams);
  RunOptions opts;
  opts.record = false;
  run_trajectory(s, g.potential, cfg, steps, std::span<const Observer<double>>(&observer, 1), streams, opts);

  auto variance = [&](int i) {
    const double m = acc[i].mean();
    const double var = acc[i + 1].mean() - m * m;
    const double se = std::hypot(acc[i + 1].standard_error(), 2.0 * m * acc[i].standard_error());
    return std::pair{var, se};
  };
  const auto [vy, se_y] = variance(0);
  const auto [vv1, se_v1] = variance(2);
  const auto [vv2, se_v2] = variance(4);
  const bool ok_y = std::abs(vy - 1.0 / 11.0) <= std::max(0.005, 3 * se_y);
  const bool ok_v1 = std::abs(vv1 - 1.0) <= std::max(0.01, 3 * se_v1);
  const bool ok_v2 = std::abs(vv2 - 1.0) <= std::max(0.01, 3 * se_v2);
  return {ok_y && ok_v1 && ok_v2, "Var(y) " + num(vy) + " +- " + num(se_y) + " (1/11 = " + num(1.0 / 11) +
                                      "), Var(v1) " + num(vv1) + " +- " + num(se_v1) + ", Var(v2) " + num(vv2) +
                                      " +- " + num(se_v2)};
}

ExperimentConfig sweep_config()
{
  ExperimentConfig cfg;
  cfg.preset = "torus1d";
  cfg.observables = {"cos2pi_x1"};
  cfg.replicas = 30;
  cfg.seed = 6;
  return cfg;
}

const SweepResult& torus_sweep()
{
  static const SweepResult sweep = bias_sweep(sweep_spec(sweep_config()));
  return sweep;
}

std::string describe(const BiasSweepTable& t)
{
  std::ostringstream out;
  for (const auto& r : t.rows)
    out << "d=" << num(r.delta) << " bias " << num(r.bias) << " +- " << num(r.se) << (r.resolved ? "" : " (unresolved)")
        << ", ";
  if (t.fit) out << "slope " << num(t.fit->slope) << " [" << num(t.fit->ci_low) << ", " << num(t.fit->ci_high) << "]";
  else out << "no slope (inconclusive)";
  return out.str();
}

Outcome weak_order()
{
  const BiasSweepTable& t = torus_sweep().table;
  const bool ok = !t.inconclusive && t.fit && t.fit->slope >= 1.6 && t.fit->slope <= 2.4;
  return {ok, describe(t)};
}

Outcome richardson_check()
{
  const SweepResult& sweep = torus_sweep();
  const BiasSweepTable rich = richardson_table(sweep, sweep.table.rows.size());
  const auto at = [](const BiasSweepTable& t, double d) {
    for (const auto& r : t.rows)
      if (std::abs(r.delta - d) < 1e-12) return r;
    throw std::runtime_error("missing row");
  };
  const BiasRow single = at(sweep.table, 0.4), extrapolated = at(rich, 0.4);
  const bool beats = single.resolved && extrapolated.resolved && extrapolated.abs_bias < single.abs_bias;

  BiasSweepTable strict = richardson_table(sweep);
  const bool steeper = !strict.inconclusive && strict.fit && sweep.table.fit && strict.fit->slope > sweep.table.fit->slope;
  return {beats && steeper, std::string("at 0.4: single ") + num(single.bias) + " +- " + num(single.se) +
                                ", richardson " + num(extrapolated.bias) + " +- " + num(extrapolated.se) +
                                (beats ? " (smaller)" : " (not smaller or unresolved)") + "; richardson sweep: " +
                                describe(strict)};
}

Outcome baoab_reduction() { return from_checks({check_baoab_reduction(100000, 8)}); }

Outcome efficiency()
{
  ExperimentConfig cfg;
  cfg.preset = "torus1d";
  cfg.delta = 0.1;
  cfg.steps = 1000000;
  cfg.seed = 9;
  cfg.observables = {"cos2pi_x1"};
  const SimulateOutcome outcome = simulate(cfg);
  const auto& j = outcome.summary;
  const bool lazy = j.at("u1_evals_equal_proposals").get<bool>();
  const double proposals = j.at("mean_proposals_per_step").get<double>();
  const double envelope = j.at("envelope_rate_per_step").at("mean").get<double>();
  const double se = std::hypot(j.at("proposal_excess").at("se").get<double>(),
                               j.at("envelope_rate_per_step").at("se").get<double>());
  const bool rate = std::abs(proposals - envelope) < 3 * se;
  const bool reported = j.contains("advantage_lhs") && j.at("advantage_lhs").is_number();
  return {lazy && rate && reported,
          std::string(lazy ? "u1 evaluations == proposals" : "u1 evaluations != proposals") + "; proposals/step " +
              num(proposals) + " vs delta*avg envelope " + num(envelope) + " (3 SE = " + num(3 * se) + ")" +
              "; advantage lhs " + (reported ? num(j.at("advantage_lhs").get<double>()) : std::string("missing"))};
}

Outcome figure_reproduction()
{
  ExperimentConfig cfg;
  cfg.activation = "relu";
  cfg.replicas = 128;
  cfg.delta = 0.01;
  cfg.steps = 10000;
  cfg.burn_in = 10.0;
  const auto cells = figures(cfg);
  const auto dir = scratch / "figures";
  write_figure_outputs(dir, cells);
  std::size_t files = 0;
  for (const auto& c : cells) files += std::filesystem::exists(dir / (c.stem + ".csv"));
  const nlohmann::json summary = figures_summary(cells);
  const bool ok = files == 6 && summary.at("velocity_std_in_window").get<bool>() &&
                  summary.at("half_life_ordering").get<bool>();
  std::ostringstream out;
  out << files << " scenario files; ";
  for (const auto& c : cells) {
    out << "(g=" << num(c.gamma) << ", rho=" << num(c.rho) << ") std " << num(c.velocity_std) << " v1 half-life ";
    out << (!c.half_life.empty() && c.half_life[0] ? num(*c.half_life[0]) : std::string("none")) << "; ";
  }
  return {ok, out.str()};
}

Outcome ergodicity()
{
  ExperimentConfig cfg;
  cfg.preset = "torus1d";
  const ErgodicityReport rep =
      ergodicity_diagnostic(preset_from(cfg), scheme_config(cfg), {0.05, 0.1, 0.2, 0.4}, 20.0, 2000, "cos2pi_x1", 11);
  std::ostringstream out;
  for (const auto& r : rep.rows)
    out << "d=" << num(r.delta) << " settles at step " << (r.first_step ? std::to_string(*r.first_step) : "never")
        << ", ";
  out << (rep.monotone ? "strictly decreasing" : "not strictly decreasing");
  return {rep.monotone, out.str()};
}

} // namespace

int main(int argc, char** argv)
{
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    else scratch = arg;
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"psi identity", psi_identity},
      {"envelope validity", envelope_validity},
      {"thinning exactness", thinning_exactness},
      {"invariance of the Gibbs measure", invariance},
      {"invariant moments", invariant_moments},
      {"weak order 2", weak_order},
      {"richardson", richardson_check},
      {"baoab reduction", baoab_reduction},
      {"efficiency accounting", efficiency},
      {"figure reproduction", figure_reproduction},
      {"ergodicity diagnostic", ergodicity},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i + 1) != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.passed;
    std::cout << (o.passed ? "PASS " : "FAIL ") << (i + 1) << ". " << criteria[i].first << " [" << num(secs)
              << " s] " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}

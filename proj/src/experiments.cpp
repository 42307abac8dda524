#include "vjlp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include "vjlp/io.hpp"
#include "vjlp/jump_kernel.hpp"
#include "vjlp/oracles.hpp"

namespace vjlp {

namespace {

// Runs f(i) for i in [0, n) on up to `workers` threads; the first exception
// (by index) is rethrown.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& f)
{
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Scheme parse_scheme(const std::string& s) { return s == "baoab" ? Scheme::kBaoab : Scheme::kBjaoajb; }

std::uint64_t steps_for(double time, double delta)
{
  return static_cast<std::uint64_t>(std::llround(time / delta));
}

nlohmann::json counters_json(const EventCounters& c)
{
  return {{"proposals", c.proposals},
          {"jumps", c.jumps},
          {"u1_evals", c.u1_evals},
          {"u0_evals", c.u0_evals},
          {"envelope_mass", c.envelope_mass}};
}

} // namespace

double advantage_lhs(const SplitPotentialD& pot, const ActivationD& act, double delta)
{
  const double grad_sup = pot.channel_bound.size() ? pot.channel_bound.maxCoeff() : 0.0;
  return delta * (act.psi0() + std::sqrt(2.0 / std::numbers::pi) * act.lip() * grad_sup);
}

double total_envelope_rate(const SplitPotentialD& pot, const ActivationD& act, double rho, const VectorXd& v)
{
  const detail::EnvelopeConstants<double> k(act, rho);
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) total += k.rate(pot.channel_bound[i], v[i]);
  return total;
}

PhaseStateD initial_state(const Preset& preset, const std::string& init, const StreamFamily& streams)
{
  if (init == "zero") return PhaseStateD::zeros(preset.potential.dim());
  if (init != "gibbs") throw ContractViolation("init must be 'gibbs' or 'zero'");
  Rng rng = streams.substream(0, KernelTag::kInit);
  return GibbsSampler(preset).sample(rng);
}

RunOutput run_with_diagnostics(const Preset& preset, const SchemeConfigD& cfg, PhaseStateD init,
                               const StreamFamily& streams, std::uint64_t steps, std::uint64_t burn_in_steps,
                               const std::vector<std::string>& observables, const RunOptions& opts)
{
  RunOutput out;
  RunDiagnostics& d = out.diagnostics;
  d.steps = steps;
  std::vector<Observable> obs;
  for (const auto& name : observables) obs.push_back(make_observable(name));

  std::optional<BatchMeans> excess, envelope;
  if (steps > 0) excess.emplace(steps), envelope.emplace(steps);
  std::vector<BatchMeans> moments;
  const std::uint64_t kept = steps > burn_in_steps ? steps - burn_in_steps : 0;
  if (kept > 0)
    for (std::size_t i = 0; i < obs.size(); ++i) moments.emplace_back(kept);

  const EventCounters start = init.counters;
  EventCounters prev = start;
  const Observer<double> observer = [&](std::uint64_t k, const PhaseStateD& s) {
    if (k == 0) return;
    excess->push(static_cast<double>(s.counters.proposals - prev.proposals) -
                 (s.counters.envelope_mass - prev.envelope_mass));
    envelope->push(cfg.delta * total_envelope_rate(preset.potential, cfg.activation, cfg.rho, s.v));
    prev = s.counters;
    if (k > burn_in_steps)
      for (std::size_t i = 0; i < obs.size(); ++i) moments[i].push(obs[i].fn(s.x, s.v));
  };
  out.final_state = std::move(init);
  out.record = run_trajectory(out.final_state, preset.potential, cfg, steps,
                              std::span<const Observer<double>>(&observer, 1), streams, opts);

  d.counters = out.final_state.counters;
  if (steps > 0) {
    d.mean_proposals = static_cast<double>(d.counters.proposals - start.proposals) / static_cast<double>(steps);
    d.proposal_excess = excess->mean();
    d.proposal_excess_se = excess->standard_error();
    d.envelope_rate_per_step = envelope->mean();
    d.envelope_rate_per_step_se = envelope->standard_error();
  }
  for (std::size_t i = 0; i < moments.size(); ++i) {
    EstimatorResult r;
    r.observable = obs[i].name;
    r.estimate = moments[i].mean();
    r.se = moments[i].standard_error();
    r.n = kept;
    r.burn_in = burn_in_steps;
    r.delta = cfg.delta;
    d.moments.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulate

SimulateOutcome simulate(const ExperimentConfig& cfg)
{
  validate_config(cfg);
  const Preset preset = preset_from(cfg);
  const SchemeConfigD scheme = scheme_config(cfg);
  const StreamFamily streams(cfg.seed);
  RunOptions opts;
  opts.stride = cfg.stride;
  opts.scheme = parse_scheme(cfg.scheme);
  const std::uint64_t burn = std::min(steps_for(cfg.burn_in, cfg.delta), cfg.steps);

  SimulateOutcome out;
  out.run = run_with_diagnostics(preset, scheme, initial_state(preset, cfg.init, streams), streams, cfg.steps, burn,
                                 cfg.observables, opts);
  const RunDiagnostics& d = out.run.diagnostics;

  nlohmann::json moments = nlohmann::json::array();
  for (const auto& m : d.moments)
    moments.push_back({{"observable", m.observable}, {"estimate", m.estimate}, {"se", m.se}, {"n", m.n},
                       {"burn_in", m.burn_in}});
  const double lhs = advantage_lhs(preset.potential, scheme.activation, cfg.delta);
  out.summary = {
      {"preset", preset.name},
      {"params", {{"c", cfg.params.c}, {"epsilon", cfg.params.epsilon}, {"box", cfg.params.box}}},
      {"scheme", cfg.scheme},
      {"gamma", cfg.gamma},
      {"rho", cfg.rho},
      {"delta", cfg.delta},
      {"steps", cfg.steps},
      {"seed", cfg.seed},
      {"activation", cfg.activation},
      {"init", cfg.init},
      {"counters", counters_json(d.counters)},
      {"u1_evals_equal_proposals", d.counters.u1_evals == d.counters.proposals},
      {"mean_proposals_per_step", d.mean_proposals},
      {"expected_proposals_per_step", cfg.steps ? d.counters.envelope_mass / static_cast<double>(cfg.steps) : 0.0},
      {"proposal_excess", {{"mean", d.proposal_excess}, {"se", d.proposal_excess_se}}},
      {"envelope_rate_per_step", {{"mean", d.envelope_rate_per_step}, {"se", d.envelope_rate_per_step_se}}},
      {"advantage_lhs", lhs},
      {"advantage_expected", lhs < 1.0},
      {"moments", moments},
  };
  return out;
}

void write_simulate_outputs(const std::filesystem::path& dir, const SimulateOutcome& outcome)
{
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + (dir / "trajectory.csv").string());
  write_trajectory_header(csv, outcome.run.final_state.dim());
  for (const auto& row : outcome.run.record.rows)
    if (row.step > 0) write_trajectory_row(csv, row);
  write_text_file(dir / "summary.json", outcome.summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// figures

std::optional<std::size_t> autocorrelation_half_life(const std::vector<std::vector<double>>& series)
{
  double sum = 0.0;
  std::size_t count = 0, longest = 0;
  for (const auto& s : series) {
    for (double x : s) sum += x;
    count += s.size();
    longest = std::max(longest, s.size());
  }
  if (count < 2) return std::nullopt;
  const double mean = sum / static_cast<double>(count);
  double c0 = 0.0;
  for (const auto& s : series)
    for (double x : s) c0 += (x - mean) * (x - mean);
  c0 /= static_cast<double>(count);
  if (!(c0 > 0.0)) return std::nullopt;
  for (std::size_t lag = 1; lag < longest / 2; ++lag) {
    double c = 0.0;
    std::size_t pairs = 0;
    for (const auto& s : series) {
      if (s.size() <= lag) continue;
      for (std::size_t k = 0; k + lag < s.size(); ++k) c += (s[k] - mean) * (s[k + lag] - mean);
      pairs += s.size() - lag;
    }
    if (pairs && c / static_cast<double>(pairs) <= 0.5 * c0) return lag;
  }
  return std::nullopt;
}

std::vector<FigureCell> figures(const ExperimentConfig& cfg)
{
  validate_config(cfg);
  const Preset preset = preset_from(cfg);
  if (preset.kind != PresetKind::kGaussian2d) throw ContractViolation("figures need the gaussian2d preset");
  const std::uint64_t burn = std::min(steps_for(cfg.burn_in, cfg.delta), cfg.steps);
  const auto replicas = static_cast<std::size_t>(cfg.replicas);
  const Eigen::Index d = preset.potential.dim();

  std::vector<FigureCell> cells;
  for (double gamma : {1e-4, 0.1, 100.0})
    for (double rho : {-1.0, 1.0 - 1e-4}) {
      FigureCell cell;
      cell.gamma = gamma;
      cell.rho = rho;
      cell.stem = "cell_gamma" + format_double(gamma) + "_rho" + format_double(rho);
      cells.push_back(cell);
    }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    FigureCell& cell = cells[c];
    SchemeConfigD scheme = scheme_config(cfg);
    scheme.gamma = cell.gamma;
    scheme.rho = cell.rho;
    // velocity series per (replica, coordinate)
    std::vector<std::vector<double>> series(replicas * static_cast<std::size_t>(d));
    parallel_for(replicas, cfg.workers, [&](std::size_t r) {
      const StreamFamily streams(splitmix64(cfg.seed + c), r);
      PhaseStateD s = initial_state(preset, cfg.init, streams);
      for (Eigen::Index i = 0; i < d; ++i) series[r * d + i].reserve(cfg.steps - burn);
      const Observer<double> observer = [&](std::uint64_t k, const PhaseStateD& st) {
        if (k <= burn) return;
        for (Eigen::Index i = 0; i < d; ++i) series[r * d + i].push_back(st.v[i]);
      };
      RunOptions opts;
      opts.stride = cfg.stride;
      opts.record = r == 0;
      auto rec = run_trajectory(s, preset.potential, scheme, cfg.steps,
                                std::span<const Observer<double>>(&observer, 1), streams, opts);
      if (r == 0) cell.record = std::move(rec);
    });
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& s : series)
      for (double v : s) sum += v, sq += v * v, ++n;
    if (n > 1) {
      const double mean = sum / static_cast<double>(n);
      cell.velocity_std = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      std::vector<std::vector<double>> coord;
      for (std::size_t r = 0; r < replicas; ++r) coord.push_back(std::move(series[r * d + i]));
      const auto lag = autocorrelation_half_life(coord);
      cell.half_life.push_back(lag ? std::optional(static_cast<double>(*lag) * cfg.delta) : std::nullopt);
    }
  }
  return cells;
}

void write_figure_outputs(const std::filesystem::path& dir, const std::vector<FigureCell>& cells)
{
  std::filesystem::create_directories(dir);
  for (const auto& cell : cells) {
    std::ofstream csv(dir / (cell.stem + ".csv"), std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / (cell.stem + ".csv")).string());
    const Eigen::Index d = cell.record.rows.empty() ? 2 : cell.record.rows.front().x.size();
    write_trajectory_header(csv, d);
    for (const auto& row : cell.record.rows)
      if (row.step > 0) write_trajectory_row(csv, row);
    std::ofstream svg(dir / (cell.stem + ".svg"), std::ios::binary);
    write_trajectory_svg(svg, cell.record,
                         "gamma = " + format_double(cell.gamma) + ", rho = " + format_double(cell.rho));
  }
  write_text_file(dir / "summary.json", figures_summary(cells).dump(2) + "\n");
}

nlohmann::json figures_summary(const std::vector<FigureCell>& cells)
{
  nlohmann::json out;
  out["cells"] = nlohmann::json::array();
  bool std_ok = true;
  for (const auto& c : cells) {
    nlohmann::json half_lives = nlohmann::json::array();
    for (const auto& h : c.half_life) half_lives.push_back(h ? nlohmann::json(*h) : nlohmann::json(nullptr));
    out["cells"].push_back({{"gamma", c.gamma},
                            {"rho", c.rho},
                            {"file", c.stem + ".csv"},
                            {"velocity_std", c.velocity_std},
                            {"half_life", half_lives}});
    std_ok = std_ok && c.velocity_std >= 0.85 && c.velocity_std <= 1.15;
  }
  // ballistic > intermediate > diffusive, separately for each rho
  bool ordered = true;
  for (double rho : {-1.0, 1.0 - 1e-4}) {
    std::vector<double> hl;
    for (double gamma : {1e-4, 0.1, 100.0})
      for (const auto& c : cells)
        if (c.rho == rho && c.gamma == gamma)
          hl.push_back(!c.half_life.empty() && c.half_life[0] ? *c.half_life[0]
                                                              : std::numeric_limits<double>::infinity());
    ordered = ordered && hl.size() == 3 && hl[0] > hl[1] && hl[1] > hl[2];
  }
  out["velocity_std_in_window"] = std_ok;
  out["half_life_ordering"] = ordered;
  return out;
}

// ---------------------------------------------------------------------------
// sweeps

SweepSpec sweep_spec(const ExperimentConfig& cfg)
{
  validate_config(cfg);
  SweepSpec spec;
  spec.preset = preset_from(cfg);
  spec.activation = parse_activation(cfg.activation);
  spec.gamma = cfg.gamma;
  spec.rho = cfg.rho;
  spec.deltas = cfg.deltas;
  spec.time_per_replica = cfg.time;
  spec.burn_in_time = cfg.burn_in;
  spec.replicas = cfg.replicas;
  spec.scheme = parse_scheme(cfg.scheme);
  spec.observable = cfg.observables.empty() ? "cos2pi_x1" : cfg.observables.front();
  spec.seed = cfg.seed;
  spec.workers = cfg.workers;
  return spec;
}

nlohmann::json sweep_summary(const BiasSweepTable& table, double lo, double hi)
{
  nlohmann::json out{{"preset", table.preset}, {"observable", table.observable}, {"inconclusive", table.inconclusive}};
  if (table.fit) {
    out["slope"] = table.fit->slope;
    out["ci_low"] = table.fit->ci_low;
    out["ci_high"] = table.fit->ci_high;
    out["in_window"] = table.fit->slope >= lo && table.fit->slope <= hi;
  } else {
    out["slope"] = nullptr;
    out["ci_low"] = nullptr;
    out["ci_high"] = nullptr;
    out["in_window"] = false;
  }
  out["rows"] = nlohmann::json::array();
  for (const auto& r : table.rows)
    out["rows"].push_back({{"delta", r.delta},
                           {"estimate", r.estimate},
                           {"se", r.se},
                           {"bias", r.bias},
                           {"resolved", r.resolved}});
  return out;
}

// ---------------------------------------------------------------------------
// ergodicity

ErgodicityReport ergodicity_diagnostic(const Preset& preset, const SchemeConfigD& base, std::vector<double> deltas,
                                       double horizon, int replicas, const std::string& observable,
                                       std::uint64_t seed, int workers)
{
  if (replicas < 2) throw ContractViolation("ergodicity diagnostic needs at least two replicas");
  std::sort(deltas.begin(), deltas.end());
  const Observable f = make_observable(observable);
  const Eigen::Index d = preset.potential.dim();

  // rest at the bottom of the well vs a fast start on the far side
  PhaseStateD low = PhaseStateD::zeros(d);
  PhaseStateD high = PhaseStateD::zeros(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    high.x[i] = preset.potential.space.is_torus() ? 0.5 * preset.potential.space.period[i] : 3.0;
    high.v[i] = 5.0;
  }

  ErgodicityReport report;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    SchemeConfigD cfg = base;
    cfg.delta = deltas[j];
    const std::uint64_t n = steps_for(horizon, cfg.delta);
    const auto reps = static_cast<std::size_t>(replicas);
    // values[(start * reps + r) * (n + 1) + k]
    std::vector<double> values(2 * reps * (n + 1));
    parallel_for(2 * reps, workers, [&](std::size_t task) {
      const std::size_t start = task / reps, r = task % reps;
      const StreamFamily streams(splitmix64(seed + 0x51ed27 * (j + 1) + start), r);
      PhaseStateD s = start == 0 ? low : high;
      double* out = values.data() + task * (n + 1);
      const Observer<double> observer = [&](std::uint64_t k, const PhaseStateD& st) { out[k] = f.fn(st.x, st.v); };
      RunOptions opts;
      opts.record = false;
      run_trajectory(s, preset.potential, cfg, n, std::span<const Observer<double>>(&observer, 1), streams, opts);
    });

    ErgodicityRow row;
    row.delta = cfg.delta;
    std::vector<bool> within(n + 1);
    for (std::uint64_t k = 0; k <= n; ++k) {
      double mean[2] = {0.0, 0.0}, var[2] = {0.0, 0.0};
      for (int start = 0; start < 2; ++start) {
        for (std::size_t r = 0; r < reps; ++r) mean[start] += values[(start * reps + r) * (n + 1) + k];
        mean[start] /= static_cast<double>(reps);
        for (std::size_t r = 0; r < reps; ++r) {
          const double e = values[(start * reps + r) * (n + 1) + k] - mean[start];
          var[start] += e * e;
        }
        var[start] /= static_cast<double>(reps - 1);
      }
      const double gap = std::abs(mean[0] - mean[1]);
      const double se = std::sqrt((var[0] + var[1]) / static_cast<double>(reps));
      if (k == 0) row.initial_gap = gap;
      within[k] = gap < 3.0 * se;
    }
    // a transient crossing of the two mean curves does not count: the gap
    // has to stay inside the noise band for a tenth of the horizon
    const auto hold = std::max<std::uint64_t>(1, steps_for(0.1 * horizon, cfg.delta));
    for (std::uint64_t k = 0; k + hold <= n && !row.first_step; ++k) {
      std::uint64_t j = k;
      while (j <= k + hold && within[j]) ++j;
      if (j > k + hold) {
        row.first_step = k;
        row.first_time = static_cast<double>(k) * cfg.delta;
      }
    }
    report.rows.push_back(row);
  }
  report.monotone = !report.rows.empty();
  for (std::size_t j = 0; j < report.rows.size(); ++j) {
    if (!report.rows[j].first_step) report.monotone = false;
    else if (j > 0 && report.rows[j - 1].first_step && !(*report.rows[j].first_step < *report.rows[j - 1].first_step))
      report.monotone = false;
  }
  return report;
}

// ---------------------------------------------------------------------------
// validation battery

std::vector<CheckResult> validation_battery(const ExperimentConfig& cfg, const ValidationSizes& sizes,
                                            double bound_scale)
{
  validate_config(cfg);
  const ActivationD act = parse_activation(cfg.activation);
  const std::uint64_t seed = cfg.seed;
  std::vector<CheckResult> out;
  out.push_back(check_psi_identity(1000, seed));
  out.push_back(check_psi_lipschitz(1000, seed));
  out.push_back(check_rate_identity(100000, seed));
  out.push_back(check_envelope(sizes.envelope_tuples, seed));

  std::vector<Preset> presets;
  for (const auto& name : preset_names()) presets.push_back(make_preset(name, cfg.params));
  for (const auto& p : presets) {
    out.push_back(check_channel_bounds(p, 10000, seed));
    if (p.potential.space.is_torus()) out.push_back(check_periodicity(p, 1000, seed));
  }

  const Preset torus = make_preset("torus1d", cfg.params);
  for (double rho : {-1.0, 0.0, 0.9})
    out.push_back(check_thinning_vs_reference(torus, act, rho, 0.5, sizes.thinning_replicas, seed + 11));
  out.push_back(check_flip_paths(torus, ActivationD::relu(), 0.5, sizes.thinning_replicas, seed + 12));

  for (const auto& p : presets)
    if (p.kind != PresetKind::kFree)
      out.push_back(check_stationarity(p, act, 1.0, 0.0, sizes.residual_samples, seed + 13));

  out.push_back(check_baoab_reduction(sizes.chain_steps, seed + 14));

  SchemeConfigD chain;
  chain.activation = act;
  chain.delta = 0.1;
  chain.seed = seed + 15;
  out.push_back(check_proposal_accounting(torus, chain, sizes.chain_steps));

  chain.delta = 0.01;
  for (const auto& p : presets)
    out.push_back(check_chain_bounds(bound_scale == 1.0 ? p : with_scaled_bound(p, bound_scale), chain,
                                     sizes.chain_steps / 10));
  return out;
}

} // namespace vjlp

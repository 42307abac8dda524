#ifndef VJLP_EXPERIMENTS_HPP
#define VJLP_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vjlp/config.hpp"
#include "vjlp/estimators.hpp"
#include "vjlp/integrator.hpp"
#include "vjlp/validation.hpp"

namespace vjlp {

/// delta (Psi(0) + sqrt(2/pi) |Psi'|_inf |grad U1|_inf) with
/// |grad U1|_inf = max_i M_i. A value below 1 predicts fewer U1 evaluations
/// than a scheme that evaluates grad U1 every step.
double advantage_lhs(const SplitPotentialD& pot, const ActivationD& act, double delta);

/// Sum_i of envelope rates at the state's velocity.
double total_envelope_rate(const SplitPotentialD& pot, const ActivationD& act, double rho, const VectorXd& v);

/// Per-run statistics gathered step by step.
struct RunDiagnostics {
  std::uint64_t steps = 0;
  EventCounters counters;
  double mean_proposals = 0.0;
  /// Mean and batch-means SE of (proposals - integrated envelope) per step;
  /// zero in expectation for exact thinning.
  double proposal_excess = 0.0;
  double proposal_excess_se = 0.0;
  /// delta times the time average of the total envelope rate at step ends.
  double envelope_rate_per_step = 0.0;
  double envelope_rate_per_step_se = 0.0;
  std::vector<EstimatorResult> moments; // after burn-in
};

struct RunOutput {
  TrajectoryRecord<double> record;
  RunDiagnostics diagnostics;
  PhaseStateD final_state;
};

/// Initial state per `init`: an exact Gibbs draw from the kInit stream, or
/// (x, v) = 0.
PhaseStateD initial_state(const Preset& preset, const std::string& init, const StreamFamily& streams);

RunOutput run_with_diagnostics(const Preset& preset, const SchemeConfigD& cfg, PhaseStateD init,
                               const StreamFamily& streams, std::uint64_t steps, std::uint64_t burn_in_steps,
                               const std::vector<std::string>& observables, const RunOptions& opts);

// ---------------------------------------------------------------------------
// Commands

struct SimulateOutcome {
  RunOutput run;
  nlohmann::json summary;
};

/// One chain; the summary carries counters, proposals per step, moments and
/// the advantage left-hand side.
SimulateOutcome simulate(const ExperimentConfig& cfg);

/// trajectory.csv (post-step rows only, so n = 0 gives a header) and
/// summary.json.
void write_simulate_outputs(const std::filesystem::path& dir, const SimulateOutcome& outcome);

struct FigureCell {
  double gamma = 0.0;
  double rho = 0.0;
  std::string stem;
  TrajectoryRecord<double> record; // replica 0
  double velocity_std = 0.0;       // pooled over replicas and coordinates
  /// Per coordinate: first lag time with velocity ACF <= 1/2. The regime
  /// ordering reads coordinate 1, which carries no jump channel in gaussian2d.
  std::vector<std::optional<double>> half_life;
};

/// Figure 1 grid gamma in {1e-4, 0.1, 100} x rho in {-1, 1 - 1e-4} at the
/// configured delta and steps. Diagnostics pool `cfg.replicas` chains per
/// cell after `cfg.burn_in`.
std::vector<FigureCell> figures(const ExperimentConfig& cfg);
void write_figure_outputs(const std::filesystem::path& dir, const std::vector<FigureCell>& cells);
nlohmann::json figures_summary(const std::vector<FigureCell>& cells);

/// Pooled normalized autocorrelation of centered series; returns the first
/// lag at which it drops to 1/2 or below.
std::optional<std::size_t> autocorrelation_half_life(const std::vector<std::vector<double>>& series);

SweepSpec sweep_spec(const ExperimentConfig& cfg);
nlohmann::json sweep_summary(const BiasSweepTable& table, double lo = 1.6, double hi = 2.4);

/// Ergodicity diagnostic: ensembles started at two extreme states, one per
/// delta, observed at equal simulated time. For each delta the first step
/// from which the ensemble means of `observable` stay within 3 SE of each
/// other for a tenth of the horizon.
struct ErgodicityRow {
  double delta = 0.0;
  std::optional<std::uint64_t> first_step;
  double first_time = 0.0;
  double initial_gap = 0.0;
};

struct ErgodicityReport {
  std::vector<ErgodicityRow> rows;
  bool monotone = false; // first_step strictly decreasing as delta grows
};

ErgodicityReport ergodicity_diagnostic(const Preset& preset, const SchemeConfigD& base, std::vector<double> deltas,
                                       double horizon, int replicas, const std::string& observable,
                                       std::uint64_t seed, int workers = 1);

/// The `validate` battery at the given sample sizes.
struct ValidationSizes {
  std::uint64_t envelope_tuples = 100000;
  std::uint64_t thinning_replicas = 20000;
  std::uint64_t residual_samples = 200000;
  std::uint64_t chain_steps = 100000;
};

std::vector<CheckResult> validation_battery(const ExperimentConfig& cfg, const ValidationSizes& sizes,
                                            double bound_scale = 1.0);

} // namespace vjlp

#endif // VJLP_EXPERIMENTS_HPP

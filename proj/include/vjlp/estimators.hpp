#ifndef VJLP_ESTIMATORS_HPP
#define VJLP_ESTIMATORS_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vjlp/integrator.hpp"
#include "vjlp/oracles.hpp"
#include "vjlp/presets.hpp"

namespace vjlp {

struct EstimatorResult {
  std::string observable;
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t n = 0;       // samples after burn-in, summed over replicas
  std::uint64_t burn_in = 0; // per replica
  double delta = 0.0;
  std::uint64_t replicas = 1;
};

/// Streaming batch means for a run of known length n: floor(sqrt(n)) batches
/// of equal size; a remainder shorter than one batch enters the mean only.
class BatchMeans {
 public:
  explicit BatchMeans(std::uint64_t n);

  void push(double value);

  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t batches() const noexcept { return n_batches_; }
  double mean() const;
  double standard_error() const;

 private:
  std::uint64_t n_batches_;
  std::uint64_t batch_size_;
  std::uint64_t count_ = 0;
  std::uint64_t in_batch_ = 0;
  double total_ = 0.0;
  double batch_sum_ = 0.0;
  std::vector<double> batch_means_;
};

/// Mean of values[burn_in..] with a batch-means standard error. Refuses runs
/// with fewer than 10 batches.
EstimatorResult time_average(std::span<const double> values, std::uint64_t burn_in, std::string observable = {},
                             double delta = 0.0);

/// Equal-weight pooling of independent replicas.
EstimatorResult combine_replicas(std::span<const EstimatorResult> parts);

/// (4/3) half - (1/3) full, errors combined in quadrature.
EstimatorResult richardson(const EstimatorResult& half, const EstimatorResult& full);

// ---------------------------------------------------------------------------
// Bias sweeps

struct BiasRow {
  double delta = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double reference = 0.0;
  double bias = 0.0;
  double abs_bias = 0.0;
  bool resolved = false; // |bias| > 3 se
};

BiasRow make_bias_row(double delta, double estimate, double se, double reference);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t points = 0;
};

struct BiasSweepTable {
  std::string preset;
  std::string observable;
  std::vector<BiasRow> rows; // delta strictly decreasing
  std::optional<OrderFit> fit;
  bool inconclusive = false;
};

/// Least squares of log|bias| on log delta over the resolved rows, with a
/// 95% Student-t interval. Needs at least three resolved rows.
OrderFit fit_order(std::span<const BiasRow> rows);

/// Marks the table inconclusive when more than `allowed_unresolved` rows are
/// unresolved, otherwise attaches the order fit.
void finalize_table(BiasSweepTable& table, std::size_t allowed_unresolved = 0);

struct SweepSpec {
  Preset preset;
  ActivationD activation = ActivationD::softplus(1.0);
  double gamma = 1.0;
  double rho = 0.0;
  std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
  double time_per_replica = 1e5; // simulated time after burn-in
  double burn_in_time = 50.0;
  int replicas = 4;
  Scheme scheme = Scheme::kBjaoajb;
  BaoabForce baoab_force = BaoabForce::kFull;
  std::string observable = "cos2pi_x1";
  std::uint64_t seed = 1;
  int workers = 1;
  std::size_t allowed_unresolved = 0;
};

struct SweepResult {
  BiasSweepTable table;
  std::vector<EstimatorResult> estimates; // one per delta, replicas pooled
  double reference = 0.0;
};

/// Runs independent replicated chains at every delta from exact Gibbs
/// draws and tabulates the bias of the time average against the quadrature
/// reference. Results do not depend on the worker count.
SweepResult bias_sweep(const SweepSpec& spec);

/// Richardson rows for every delta whose half is also on the grid.
BiasSweepTable richardson_table(const SweepResult& sweep, std::size_t allowed_unresolved = 0);

/// Noise-free table with bias c * delta^power.
BiasSweepTable synthetic_table(std::span<const double> deltas, double c, double power, double reference = 0.0);

/// Columns delta,estimate,se,reference,bias,abs_bias,resolved.
void write_bias_sweep_csv(std::ostream& out, const BiasSweepTable& table);

} // namespace vjlp

#endif // VJLP_ESTIMATORS_HPP

#include "vjlp/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "vjlp/io.hpp"
#include "vjlp/stats.hpp"

namespace vjlp {

BatchMeans::BatchMeans(std::uint64_t n)
{
  if (n == 0) throw ContractViolation("batch means needs a positive run length");
  n_batches_ = static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(n))));
  batch_size_ = n / n_batches_;
  batch_means_.reserve(n_batches_);
}

void BatchMeans::push(double value)
{
  ++count_;
  total_ += value;
  if (batch_means_.size() == n_batches_) return;
  batch_sum_ += value;
  if (++in_batch_ == batch_size_) {
    batch_means_.push_back(batch_sum_ / static_cast<double>(batch_size_));
    batch_sum_ = 0.0;
    in_batch_ = 0;
  }
}

double BatchMeans::mean() const { return count_ ? total_ / static_cast<double>(count_) : 0.0; }

double BatchMeans::standard_error() const
{
  const std::size_t b = batch_means_.size();
  if (b < 2) return 0.0;
  double m = 0.0;
  for (double x : batch_means_) m += x;
  m /= static_cast<double>(b);
  double ss = 0.0;
  for (double x : batch_means_) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

EstimatorResult time_average(std::span<const double> values, std::uint64_t burn_in, std::string observable,
                             double delta)
{
  if (burn_in >= values.size()) throw ContractViolation("burn-in must be shorter than the run");
  const std::uint64_t n = values.size() - burn_in;
  if (static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(n)))) < 10)
    throw ContractViolation("run too short: fewer than 10 batches after burn-in");
  BatchMeans bm(n);
  for (std::uint64_t k = burn_in; k < values.size(); ++k) bm.push(values[k]);
  EstimatorResult r;
  r.observable = std::move(observable);
  r.estimate = bm.mean();
  r.se = bm.standard_error();
  r.n = n;
  r.burn_in = burn_in;
  r.delta = delta;
  return r;
}

EstimatorResult combine_replicas(std::span<const EstimatorResult> parts)
{
  if (parts.empty()) throw ContractViolation("no replicas to combine");
  EstimatorResult r = parts.front();
  double sum = 0.0, var = 0.0;
  std::uint64_t n = 0, replicas = 0;
  for (const auto& p : parts) {
    if (p.observable != r.observable) throw ContractViolation("replicas estimate different observables");
    sum += p.estimate;
    var += p.se * p.se;
    n += p.n;
    replicas += p.replicas;
  }
  const double k = static_cast<double>(parts.size());
  r.estimate = sum / k;
  r.se = std::sqrt(var) / k;
  r.n = n;
  r.replicas = replicas;
  return r;
}

EstimatorResult richardson(const EstimatorResult& half, const EstimatorResult& full)
{
  if (half.observable != full.observable) throw ContractViolation("Richardson pair estimates different observables");
  EstimatorResult r = full;
  r.estimate = 4.0 / 3.0 * half.estimate - 1.0 / 3.0 * full.estimate;
  r.se = std::hypot(4.0 / 3.0 * half.se, 1.0 / 3.0 * full.se);
  r.n = half.n + full.n;
  r.replicas = half.replicas + full.replicas;
  return r;
}

BiasRow make_bias_row(double delta, double estimate, double se, double reference)
{
  BiasRow row{delta, estimate, se, reference, estimate - reference, std::abs(estimate - reference), false};
  row.resolved = row.abs_bias > 3.0 * se;
  return row;
}

OrderFit fit_order(std::span<const BiasRow> rows)
{
  std::vector<double> xs, ys;
  for (const auto& r : rows)
    if (r.resolved && r.delta > 0.0 && r.abs_bias > 0.0) {
      xs.push_back(std::log(r.delta));
      ys.push_back(std::log(r.abs_bias));
    }
  const std::size_t n = xs.size();
  if (n < 3) throw ContractViolation("order fit needs at least three resolved rows");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += xs[i], my += ys[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ContractViolation("order fit needs distinct step sizes");
  OrderFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr += e * e;
  }
  const double dof = static_cast<double>(n - 2);
  const double half_width = students_t_quantile(0.975, dof) * std::sqrt(ssr / dof / sxx);
  fit.ci_low = fit.slope - half_width;
  fit.ci_high = fit.slope + half_width;
  return fit;
}

void finalize_table(BiasSweepTable& table, std::size_t allowed_unresolved)
{
  const auto unresolved =
      static_cast<std::size_t>(std::count_if(table.rows.begin(), table.rows.end(), [](const BiasRow& r) { return !r.resolved; }));
  table.fit.reset();
  table.inconclusive = unresolved > allowed_unresolved || table.rows.size() - unresolved < 3;
  if (!table.inconclusive) table.fit = fit_order(table.rows);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

void check_deltas(std::span<const double> deltas)
{
  if (deltas.empty()) throw ContractViolation("step size grid is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ContractViolation("step sizes must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ContractViolation("step sizes must be strictly decreasing");
  }
}

struct ReplicaTask {
  std::size_t delta_index;
  int replica;
};

EstimatorResult run_replica(const SweepSpec& spec, const GibbsSampler& sampler, const Observable& f,
                            std::size_t delta_index, int replica)
{
  SchemeConfigD cfg;
  cfg.gamma = spec.gamma;
  cfg.rho = spec.rho;
  cfg.delta = spec.deltas[delta_index];
  cfg.activation = spec.activation;
  cfg.seed = spec.seed;
  const auto n = static_cast<std::uint64_t>(std::llround(spec.time_per_replica / cfg.delta));
  const auto burn = static_cast<std::uint64_t>(std::llround(spec.burn_in_time / cfg.delta));
  cfg.n_steps = n + burn;

  // one family per step size so chains at different deltas are independent
  const StreamFamily streams(splitmix64(spec.seed + 0x9e3779b97f4a7c15ULL * (delta_index + 1)),
                             static_cast<std::uint64_t>(replica));
  Rng init = streams.substream(0, KernelTag::kInit);
  PhaseStateD state = sampler.sample(init);

  BatchMeans bm(n);
  const Observer<double> observer = [&](std::uint64_t k, const PhaseStateD& s) {
    if (k > burn) bm.push(f.fn(s.x, s.v));
  };
  RunOptions opts;
  opts.record = false;
  opts.scheme = spec.scheme;
  opts.baoab_force = spec.baoab_force;
  run_trajectory(state, spec.preset.potential, cfg, cfg.n_steps, std::span<const Observer<double>>(&observer, 1),
                 streams, opts);

  EstimatorResult r;
  r.observable = f.name;
  r.estimate = bm.mean();
  r.se = bm.standard_error();
  r.n = n;
  r.burn_in = burn;
  r.delta = cfg.delta;
  return r;
}

} // namespace

SweepResult bias_sweep(const SweepSpec& spec)
{
  check_deltas(spec.deltas);
  if (spec.replicas < 1) throw ContractViolation("sweep needs at least one replica");
  if (!(spec.time_per_replica > 0.0)) throw ContractViolation("sweep needs a positive time budget");
  const Observable f = make_observable(spec.observable);
  const GibbsSampler sampler(spec.preset);

  SweepResult out;
  out.reference = exact_moment(spec.preset, f);

  std::vector<ReplicaTask> tasks;
  for (std::size_t i = 0; i < spec.deltas.size(); ++i)
    for (int r = 0; r < spec.replicas; ++r) tasks.push_back({i, r});
  std::vector<EstimatorResult> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
      try {
        results[t] = run_replica(spec, sampler, f, tasks[t].delta_index, tasks[t].replica);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(spec.workers, 1, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  out.table.preset = spec.preset.name;
  out.table.observable = f.name;
  for (std::size_t i = 0; i < spec.deltas.size(); ++i) {
    const auto first = results.begin() + static_cast<std::ptrdiff_t>(i * spec.replicas);
    const EstimatorResult pooled =
        combine_replicas(std::span<const EstimatorResult>(&*first, static_cast<std::size_t>(spec.replicas)));
    out.estimates.push_back(pooled);
    out.table.rows.push_back(make_bias_row(spec.deltas[i], pooled.estimate, pooled.se, out.reference));
  }
  finalize_table(out.table, spec.allowed_unresolved);
  return out;
}

BiasSweepTable richardson_table(const SweepResult& sweep, std::size_t allowed_unresolved)
{
  BiasSweepTable table;
  table.preset = sweep.table.preset;
  table.observable = sweep.table.observable + " (richardson)";
  for (const auto& full : sweep.estimates)
    for (const auto& half : sweep.estimates)
      if (std::abs(half.delta - 0.5 * full.delta) <= 1e-12 * full.delta) {
        const EstimatorResult r = richardson(half, full);
        table.rows.push_back(make_bias_row(full.delta, r.estimate, r.se, sweep.reference));
      }
  finalize_table(table, allowed_unresolved);
  return table;
}

BiasSweepTable synthetic_table(std::span<const double> deltas, double c, double power, double reference)
{
  check_deltas(deltas);
  BiasSweepTable table;
  table.preset = "synthetic";
  table.observable = "injected";
  for (double d : deltas) {
    BiasRow row = make_bias_row(d, reference + c * std::pow(d, power), 0.0, reference);
    row.resolved = row.abs_bias > 0.0;
    table.rows.push_back(row);
  }
  finalize_table(table);
  return table;
}

void write_bias_sweep_csv(std::ostream& out, const BiasSweepTable& table)
{
  out << "delta,estimate,se,reference,bias,abs_bias,resolved\n";
  for (const auto& r : table.rows)
    out << format_double(r.delta) << ',' << format_double(r.estimate) << ',' << format_double(r.se) << ','
        << format_double(r.reference) << ',' << format_double(r.bias) << ',' << format_double(r.abs_bias) << ','
        << (r.resolved ? 1 : 0) << '\n';
}

} // namespace vjlp

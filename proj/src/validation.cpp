#include "vjlp/validation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vjlp/experiments.hpp"
#include "vjlp/jump_kernel.hpp"
#include "vjlp/oracles.hpp"
#include "vjlp/stats.hpp"

namespace vjlp {

nlohmann::json to_json(const CheckResult& c)
{
  return {{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"metrics", c.metrics}};
}

namespace {

std::vector<ActivationD> activation_panel()
{
  return {ActivationD::relu(), ActivationD::softplus(0.5), ActivationD::softplus(1.0), ActivationD::softplus(2.0)};
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_open(rng); }

std::string fmt(double x)
{
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

// Channel with the largest bound: the one whose jumps the test should see.
Eigen::Index busiest_channel(const SplitPotentialD& pot)
{
  Eigen::Index best = 0;
  pot.channel_bound.maxCoeff(&best);
  return best;
}

} // namespace

CheckResult check_psi_identity(int samples, std::uint64_t seed)
{
  CheckResult r;
  r.name = "psi_identity";
  Rng rng(splitmix64(seed));
  double worst = 0.0;
  for (const auto& act : activation_panel()) {
    double err = 0.0;
    for (int k = 0; k < samples; ++k) {
      const double s = uniform(rng, -50.0, 50.0);
      err = std::max(err, std::abs(psi(act, s) - psi(act, -s) - s));
    }
    r.metrics[act.kind == ActivationKind::kRelu ? "relu" : "softplus:" + fmt(act.scale)] = err;
    worst = std::max(worst, err);
  }
  r.passed = worst <= 1e-12;
  r.detail = "max |Psi(s) - Psi(-s) - s| = " + fmt(worst);
  return r;
}

CheckResult check_psi_lipschitz(int samples, std::uint64_t seed)
{
  CheckResult r;
  r.name = "psi_lipschitz";
  Rng rng(splitmix64(seed ^ 0x5bd1e995));
  double worst = -std::numeric_limits<double>::infinity();
  bool asymptotes = true;
  for (const auto& act : activation_panel()) {
    for (int k = 0; k < samples; ++k) {
      const double s1 = uniform(rng, -50.0, 50.0), s2 = uniform(rng, -50.0, 50.0);
      worst = std::max(worst, std::abs(psi(act, s1) - psi(act, s2)) - act.lip() * std::abs(s1 - s2) * (1 + 1e-12));
      const double d = psi_prime(act, s1);
      if (!(d >= 0.0 && d <= 1.0)) asymptotes = false;
    }
    for (double s : {1e3, 1e100, 1e300}) asymptotes = asymptotes && std::abs(psi(act, s) - s) <= 1e-12 * s;
    for (double s : {-1e3, -1e100, -1e300}) {
      const double p = psi(act, s);
      asymptotes = asymptotes && std::isfinite(p) && p >= 0.0 && p <= 1e-12;
    }
  }
  r.passed = worst <= 0.0 && asymptotes;
  r.metrics["max_excess"] = worst;
  r.metrics["asymptotes"] = asymptotes;
  r.detail = asymptotes ? "Lipschitz bound holds" : "asymptote or derivative range failure";
  return r;
}

CheckResult check_envelope(std::uint64_t tuples, std::uint64_t seed)
{
  CheckResult r;
  r.name = "envelope_domination";
  Rng rng(splitmix64(seed ^ 0x27d4eb2f));
  const auto panel = activation_panel();
  std::uint64_t rate_violations = 0, prob_violations = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t k = 0; k < tuples; ++k) {
    const ActivationD& act = panel[k % panel.size()];
    const double rho = (k / panel.size()) % 10 == 0 ? -1.0 : uniform(rng, -1.0, 0.999);
    const double bound = uniform(rng, 0.0, 10.0);
    const double theta_bar = 0.5 * bound;
    const double theta = uniform(rng, -theta_bar, theta_bar);
    const double v = uniform(rng, -5.0, 5.0);
    const double xi = 2.0 * standard_normal(rng);

    const double lambda = lambda_exact(act, rho, theta, v);
    const double rate = envelope_rate(act, rho, bound, v).rate;
    if (lambda > rate * (1.0 + 1e-9) + 1e-12) ++rate_violations;
    if (rate > 0.0) worst_ratio = std::max(worst_ratio, lambda / rate);

    const double p = acceptance_prob(act, rho, theta, theta_bar, v, xi);
    // the raw ratio, before clamping, must already lie in [0, 1]
    const double den = mark_envelope(act, rho, theta_bar, v, xi);
    const double raw = den > 0.0 ? mark_intensity(act, rho, theta, v, xi) / den : 0.0;
    if (!(p >= 0.0 && p <= 1.0) || raw > 1.0 + 1e-12 || raw < 0.0) ++prob_violations;
  }
  r.passed = rate_violations == 0 && prob_violations == 0;
  r.metrics = {{"tuples", tuples},
               {"rate_violations", rate_violations},
               {"probability_violations", prob_violations},
               {"max_lambda_over_envelope", worst_ratio}};
  r.detail = std::to_string(rate_violations + prob_violations) + " violations over " + std::to_string(tuples) +
             " tuples";
  return r;
}

CheckResult check_rate_identity(std::uint64_t tuples, std::uint64_t seed)
{
  CheckResult r;
  r.name = "rate_identity";
  Rng rng(splitmix64(seed ^ 0x165667b1));
  const auto panel = activation_panel();
  double worst = 0.0;
  for (std::uint64_t k = 0; k < tuples; ++k) {
    const ActivationD& act = panel[k % panel.size()];
    const double rho = k % 7 == 0 ? -1.0 : uniform(rng, -1.0, 0.999);
    const double bound = uniform(rng, 0.0, 10.0);
    const double v = uniform(rng, -5.0, 5.0);
    const double closed = (2.0 * act.psi0() + act.lip() * bound *
                                                  ((1.0 - rho) * std::abs(v) +
                                                   std::sqrt(2.0 * (1.0 - rho * rho) / std::numbers::pi))) /
                          (1.0 - rho);
    const auto env = envelope_rate(act, rho, bound, v);
    worst = std::max(worst, std::abs(env.w_const + env.w_linear - closed) / std::max(1.0, closed));
    worst = std::max(worst, std::abs(env.rate - env.w_const - env.w_linear));
  }
  r.passed = worst <= 1e-12;
  r.metrics["max_relative_error"] = worst;
  r.detail = "max relative error " + fmt(worst);
  return r;
}

namespace {

CheckResult compare_samplers(std::string name, const Preset& preset, std::uint64_t replicas, std::uint64_t seed,
                             const std::function<void(PhaseStateD&, const StreamFamily&)>& first,
                             const std::function<void(PhaseStateD&, const StreamFamily&)>& second)
{
  CheckResult r;
  r.name = std::move(name);
  const GibbsSampler sampler(preset);
  const Eigen::Index ch = busiest_channel(preset.potential);
  std::vector<double> a, b;
  a.reserve(replicas);
  b.reserve(replicas);
  std::uint64_t jumps_a = 0, jumps_b = 0;
  for (std::uint64_t k = 0; k < replicas; ++k) {
    const StreamFamily streams(seed, k);
    Rng init_a = streams.substream(0, KernelTag::kInit);
    Rng init_b = streams.substream(1, KernelTag::kInit);
    PhaseStateD sa = sampler.sample(init_a), sb = sampler.sample(init_b);
    first(sa, streams);
    second(sb, streams);
    a.push_back(sa.v[ch]);
    b.push_back(sb.v[ch]);
    jumps_a += sa.counters.jumps;
    jumps_b += sb.counters.jumps;
  }
  const TestResult ks = ks_two_sample(a, b);
  r.passed = ks.p_value > 0.01;
  r.metrics = {{"replicas", replicas},
               {"ks_statistic", ks.statistic},
               {"p_value", ks.p_value},
               {"jumps_first", jumps_a},
               {"jumps_second", jumps_b}};
  r.detail = "KS p = " + fmt(ks.p_value);
  return r;
}

} // namespace

CheckResult check_thinning_vs_reference(const Preset& preset, const ActivationD& act, double rho, double duration,
                                        std::uint64_t replicas, std::uint64_t seed)
{
  const JumpParams<double> jp{act, rho};
  auto r = compare_samplers(
      "thinning_vs_gillespie", preset, replicas, seed,
      [&](PhaseStateD& s, const StreamFamily& st) {
        Rng rng = st.substream(0, KernelTag::kJumpFirst);
        simulate_jump_flow(s, preset.potential, jp, duration, rng);
      },
      [&](PhaseStateD& s, const StreamFamily& st) {
        Rng rng = st.substream(0, KernelTag::kAux);
        gillespie_jump_reference(s, preset.potential, act, rho, duration, rng);
      });
  r.metrics["rho"] = rho;
  r.metrics["duration"] = duration;
  r.name += " rho=" + fmt(rho);
  return r;
}

CheckResult check_flip_paths(const Preset& preset, const ActivationD& act, double duration, std::uint64_t replicas,
                             std::uint64_t seed)
{
  const JumpParams<double> count_first{act, -1.0, true};
  const JumpParams<double> sequential{act, -1.0, false};
  return compare_samplers(
      "flip_count_vs_sequential", preset, replicas, seed,
      [&](PhaseStateD& s, const StreamFamily& st) {
        Rng rng = st.substream(0, KernelTag::kJumpFirst);
        simulate_jump_flow(s, preset.potential, count_first, duration, rng);
      },
      [&](PhaseStateD& s, const StreamFamily& st) {
        Rng rng = st.substream(0, KernelTag::kAux);
        simulate_jump_flow(s, preset.potential, sequential, duration, rng);
      });
}

CheckResult check_stationarity(const Preset& preset, const ActivationD& act, double gamma, double rho,
                               std::uint64_t n_mc, std::uint64_t seed)
{
  CheckResult r;
  r.name = "stationarity_residual " + preset.name + " rho=" + fmt(rho);
  r.passed = true;
  Rng rng(splitmix64(seed ^ 0x85ebca6b));
  std::string failing;
  for (const auto& entry : catalog_for(preset)) {
    const ResidualEstimate est = stationarity_residual(preset, act, gamma, rho, entry, n_mc, rng);
    const bool ok = std::abs(est.estimate) < 3.0 * est.se;
    r.metrics[entry.name()] = {{"estimate", est.estimate}, {"se", est.se}, {"passed", ok}};
    if (!ok) {
      r.passed = false;
      failing += (failing.empty() ? "" : ", ") + entry.name();
    }
  }
  r.detail = r.passed ? "all residuals within 3 SE" : "outside 3 SE: " + failing;
  return r;
}

CheckResult check_periodicity(const Preset& preset, int probes, std::uint64_t seed)
{
  CheckResult r;
  r.name = "periodicity " + preset.name;
  Rng rng(splitmix64(seed ^ 0xc2b2ae35));
  const PeriodicityReport rep = validate_periodicity(preset.potential, probes, 1e-10, rng);
  r.passed = rep.passed;
  r.metrics["max_violation"] = rep.max_violation;
  r.detail = rep.passed ? "periodic to 1e-10" : rep.diagnostic;
  return r;
}

CheckResult check_channel_bounds(const Preset& preset, int samples, std::uint64_t seed)
{
  CheckResult r;
  r.name = "channel_bounds " + preset.name;
  Rng rng(splitmix64(seed ^ 0x9e3779b1));
  const SplitPotentialD& pot = preset.potential;
  VectorXd x(pot.dim());
  double worst = 0.0; // max of |d_i U1| - M_i
  for (int k = 0; k < samples; ++k) {
    for (Eigen::Index i = 0; i < pot.dim(); ++i)
      x[i] = pot.space.is_torus() ? uniform(rng, 0.0, pot.space.period[i])
                                  : uniform(rng, -preset.params.box, preset.params.box);
    for (Eigen::Index i = 0; i < pot.dim(); ++i)
      worst = std::max(worst, std::abs(pot.partial_u1(x, i)) - pot.channel_bound[i] * (1.0 + 1e-12));
  }
  r.passed = worst <= 0.0;
  r.metrics["max_excess"] = worst;
  r.detail = r.passed ? "all partials within their bounds" : "bound exceeded by " + fmt(worst);
  return r;
}

CheckResult check_chain_bounds(const Preset& preset, const SchemeConfigD& cfg, std::uint64_t steps)
{
  CheckResult r;
  r.name = "chain_bounds " + preset.name;
  const StreamFamily streams(cfg.seed);
  PhaseStateD s = initial_state(preset, "gibbs", streams);
  try {
    RunOptions opts;
    opts.record = false;
    run_trajectory<double>(s, preset.potential, cfg, steps, {}, streams, opts);
    r.passed = true;
    r.detail = "no bound violation in " + std::to_string(steps) + " steps";
  } catch (const BoundViolation& e) {
    r.passed = false;
    r.detail = std::string("acceptance probability bound violated: ") + e.what();
    r.metrics = {{"channel", e.channel() + 1}, {"value", e.value()}, {"bound", e.bound()}};
  }
  return r;
}

CheckResult check_baoab_reduction(std::uint64_t steps, std::uint64_t seed)
{
  CheckResult r;
  r.name = "baoab_reduction";
  const Preset free = make_preset("free");
  SchemeConfigD cfg;
  cfg.activation = ActivationD::relu();
  cfg.delta = 0.1;
  cfg.gamma = 1.0;
  cfg.rho = 0.0;
  const StreamFamily streams(seed);
  PhaseStateD a = initial_state(free, "gibbs", streams);
  PhaseStateD b = a;
  StepScratch<double> sa(1), sb(1);
  std::uint64_t mismatch = 0;
  for (std::uint64_t k = 1; k <= steps; ++k) {
    bjaoajb_step(a, free.potential, cfg, streams, k, sa);
    baoab_step(b, free.potential, BaoabForce::kFull, cfg, streams, k, sb);
    if (!(a.x == b.x && a.v == b.v) && mismatch == 0) mismatch = k;
  }
  r.passed = mismatch == 0 && a.counters.u1_evals == 0 && a.counters.proposals == 0;
  r.metrics = {{"steps", steps}, {"first_mismatch", mismatch}, {"proposals", a.counters.proposals}};
  r.detail = r.passed ? "bit-identical over " + std::to_string(steps) + " steps"
                      : "first mismatch at step " + std::to_string(mismatch);
  return r;
}

CheckResult check_proposal_accounting(const Preset& preset, const SchemeConfigD& cfg, std::uint64_t steps)
{
  CheckResult r;
  r.name = "proposal_accounting " + preset.name;
  const StreamFamily streams(cfg.seed);
  RunOptions opts;
  opts.record = false;
  const RunOutput out =
      run_with_diagnostics(preset, cfg, initial_state(preset, "gibbs", streams), streams, steps, 0, {}, opts);
  const RunDiagnostics& d = out.diagnostics;
  const bool lazy = d.counters.u1_evals == d.counters.proposals;
  const bool rate_ok = std::abs(d.proposal_excess) < 3.0 * d.proposal_excess_se;
  r.passed = lazy && rate_ok;
  r.metrics = {{"proposals", d.counters.proposals},
               {"u1_evals", d.counters.u1_evals},
               {"mean_proposals_per_step", d.mean_proposals},
               {"envelope_mass_per_step", d.counters.envelope_mass / static_cast<double>(steps)},
               {"excess", d.proposal_excess},
               {"excess_se", d.proposal_excess_se},
               {"envelope_rate_per_step", d.envelope_rate_per_step},
               {"envelope_rate_per_step_se", d.envelope_rate_per_step_se}};
  r.detail = std::string(lazy ? "u1 evaluations equal proposals" : "u1 evaluations differ from proposals") +
             "; excess " + fmt(d.proposal_excess) + " +- " + fmt(d.proposal_excess_se);
  return r;
}

} // namespace vjlp

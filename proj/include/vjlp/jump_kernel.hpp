#ifndef VJLP_JUMP_KERNEL_HPP
#define VJLP_JUMP_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "vjlp/model.hpp"
#include "vjlp/random.hpp"

namespace vjlp {

/// Dominating rate of one jump channel, split into the mass of a Gaussian
/// mark component and of a |xi|-weighted (two-sided Rayleigh) component.
template <typename Scalar>
struct ChannelEnvelope {
  Eigen::Index channel = 0;
  Scalar theta_bar = 0;
  Scalar rate = 0;
  Scalar w_const = 0;
  Scalar w_linear = 0;
  Scalar rho = 0;
};

struct JumpEvent {
  double t = 0.0;
  Eigen::Index channel = 0;
  std::optional<double> xi; // absent for deterministic flips
  double p_accept = 0.0;
  bool accepted = false;
};

/// Writes events as CSV with columns t,channel,xi,p_accept,accepted. Channels
/// are 1-based; a missing xi is an empty field.
void write_event_log_csv(std::ostream& out, const std::vector<JumpEvent>& events);

namespace detail {
template <typename Scalar>
void check_rho(Scalar rho)
{
  if (!(rho >= Scalar(-1) && rho < Scalar(1))) throw ContractViolation("rho must lie in [-1, 1)");
}

/// Channel-independent factors of the envelope for fixed (Psi, rho).
template <typename Scalar>
struct EnvelopeConstants {
  Scalar one_minus_rho;
  Scalar pref;       // 2 / (1 - rho)
  Scalar sq;         // sqrt(1 - rho^2)
  Scalar base;       // pref * Psi(0)
  Scalar lip;
  Scalar linear_per_bound; // w_linear / M_i

  EnvelopeConstants(const Activation<Scalar>& act, Scalar rho)
  {
    check_rho(rho);
    one_minus_rho = Scalar(1) - rho;
    pref = Scalar(2) / one_minus_rho;
    sq = rho == Scalar(-1) ? Scalar(0) : std::sqrt(Scalar(1) - rho * rho);
    base = pref * act.psi0();
    lip = act.lip();
    linear_per_bound = pref * lip * Scalar(0.5) * sq * std::sqrt(Scalar(2) / std::numbers::pi_v<Scalar>);
  }

  Scalar w_const(Scalar bound, Scalar v) const noexcept
  {
    return base + pref * lip * (bound / Scalar(2)) * one_minus_rho * std::abs(v);
  }
  Scalar w_linear(Scalar bound) const noexcept { return linear_per_bound * bound; }
  Scalar rate(Scalar bound, Scalar v) const noexcept { return w_const(bound, v) + w_linear(bound); }
};

} // namespace detail

/// Envelope of lambda_i at velocity v_i:
///   (1/(1-rho)) (2 Psi(0) + |Psi'| M_i ((1-rho)|v_i| + sqrt(2(1-rho^2)/pi)))
template <typename Scalar>
ChannelEnvelope<Scalar> envelope_rate(const Activation<Scalar>& act, Scalar rho, Scalar bound,
                                      Scalar v_i, Eigen::Index channel = 0)
{
  if (!(bound >= Scalar(0))) throw ContractViolation("channel bound must be nonnegative");
  const detail::EnvelopeConstants<Scalar> k(act, rho);
  ChannelEnvelope<Scalar> env;
  env.channel = channel;
  env.rho = rho;
  env.theta_bar = bound / Scalar(2);
  env.w_const = k.w_const(bound, v_i);
  env.w_linear = k.w_linear(bound);
  env.rate = env.w_const + env.w_linear;
  return env;
}

/// Draws a mark from the normalized envelope density
///   (w_const phi(xi) + w_linear |xi| phi(xi) / sqrt(2/pi)) / rate.
template <typename Scalar>
Scalar sample_candidate(const ChannelEnvelope<Scalar>& env, Rng& rng)
{
  if (!(env.rate > Scalar(0))) throw ContractViolation("candidate sampling needs a positive envelope");
  if (env.rho == Scalar(-1)) throw ContractViolation("rho = -1 jumps are deterministic flips and take no mark");
  if (uniform_open(rng) * env.rate < env.w_const) return static_cast<Scalar>(standard_normal(rng));
  const double r = std::sqrt(2.0 * standard_exponential(rng));
  return static_cast<Scalar>((rng() >> 63) ? r : -r);
}

/// Unnormalized true mark intensity Psi(theta ((1-rho) v - sqrt(1-rho^2) xi)).
template <typename Scalar>
Scalar mark_intensity(const Activation<Scalar>& act, Scalar rho, Scalar theta, Scalar v, Scalar xi)
{
  const Scalar s = rho == Scalar(-1) ? Scalar(2) * v
                                     : (Scalar(1) - rho) * v - std::sqrt(Scalar(1) - rho * rho) * xi;
  return psi(act, theta * s);
}

/// Envelope of mark_intensity: Psi(0) + |Psi'| theta_bar ((1-rho)|v| + sqrt(1-rho^2)|xi|).
template <typename Scalar>
Scalar mark_envelope(const Activation<Scalar>& act, Scalar rho, Scalar theta_bar, Scalar v, Scalar xi)
{
  const Scalar spread = rho == Scalar(-1)
                            ? Scalar(2) * std::abs(v)
                            : (Scalar(1) - rho) * std::abs(v) + std::sqrt(Scalar(1) - rho * rho) * std::abs(xi);
  return act.psi0() + act.lip() * theta_bar * spread;
}

/// Thinning acceptance probability for a proposal (channel, xi); xi is
/// ignored when rho = -1.
template <typename Scalar>
Scalar acceptance_prob(const Activation<Scalar>& act, Scalar rho, Scalar theta, Scalar theta_bar,
                       Scalar v, Scalar xi)
{
  detail::check_rho(rho);
  const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), theta_bar);
  if (std::abs(theta) > theta_bar + slack)
    throw BoundViolation("partial derivative exceeds the channel bound", 0, static_cast<double>(2 * theta),
                         static_cast<double>(2 * theta_bar));
  const Scalar den = mark_envelope(act, rho, theta_bar, v, xi);
  if (den <= Scalar(0)) return Scalar(0);
  const Scalar num = mark_intensity(act, rho, theta, v, xi);
  return std::clamp(num / den, Scalar(0), Scalar(1));
}

/// v_i <- rho v_i + sqrt(1 - rho^2) xi; a sign flip when rho = -1.
template <typename Scalar, typename Derived>
void apply_jump_in_place(Eigen::MatrixBase<Derived>& v, Eigen::Index channel, Scalar rho,
                         std::optional<Scalar> xi)
{
  if (rho == Scalar(-1)) {
    if (xi) throw ContractViolation("deterministic flip takes no mark");
    v[channel] = -v[channel];
    return;
  }
  if (!xi) throw ContractViolation("jump with rho > -1 needs a mark");
  v[channel] = rho * v[channel] + std::sqrt(Scalar(1) - rho * rho) * *xi;
}

template <typename Scalar>
VectorX<Scalar> apply_jump(VectorX<Scalar> v, Eigen::Index channel, Scalar rho, std::optional<Scalar> xi)
{
  if (channel < 0 || channel >= v.size()) throw ContractViolation("jump channel out of range");
  apply_jump_in_place(v, channel, rho, xi);
  return v;
}

/// Parameters of the pure jump flow.
template <typename Scalar>
struct JumpParams {
  Activation<Scalar> activation;
  Scalar rho;
  /// For rho = -1, draw the proposal count up front (true) or run the
  /// sequential exponential clock like the generic path (false).
  bool count_first = true;
};

namespace detail {

template <typename Scalar>
Eigen::Index pick_channel(const VectorX<Scalar>& rates, Scalar total, double u)
{
  Scalar target = static_cast<Scalar>(u) * total;
  const Eigen::Index d = rates.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (target < rates[i]) return i;
    target -= rates[i];
  }
  // rounding can push target past the last positive rate
  for (Eigen::Index i = d - 1; i >= 0; --i)
    if (rates[i] > Scalar(0)) return i;
  return d - 1;
}

template <typename Scalar>
Scalar evaluate_theta(const SplitPotential<Scalar>& pot, const VectorX<Scalar>& x, Eigen::Index i,
                      EventCounters& counters)
{
  ++counters.u1_evals;
  const Scalar partial = pot.partial_u1(x, i);
  const Scalar bound = pot.channel_bound[i];
  if (!(std::abs(partial) <= bound * (Scalar(1) + Scalar(1e-12)) + Scalar(1e-300)))
    throw BoundViolation("|d" + std::to_string(i + 1) + "U1| exceeds its channel bound", static_cast<int>(i),
                         static_cast<double>(partial), static_cast<double>(bound));
  return partial / Scalar(2);
}

} // namespace detail

/// Exact sample of the velocity jump chain W over [0, duration] at frozen x,
/// by thinning against the per-channel envelopes. The mark xi travels with the
/// proposal, so one accept/reject realizes both the rate and the kernel. The
/// partial derivative of U1 is evaluated once per proposal and nowhere else.
///
/// For rho = -1 the envelopes are flip-invariant, so the number of proposals
/// is drawn up front from a Poisson law.
///
/// `rates` is scratch space of size d.
template <typename Scalar>
void simulate_jump_flow(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot,
                        const JumpParams<Scalar>& params, Scalar duration, Rng& rng, VectorX<Scalar>& rates,
                        std::vector<JumpEvent>* log = nullptr)
{
  if (!(duration >= Scalar(0))) throw ContractViolation("jump flow duration must be nonnegative");
  if (duration == Scalar(0)) return;
  const Eigen::Index d = s.dim();
  const Activation<Scalar>& act = params.activation;
  const Scalar rho = params.rho;
  const detail::EnvelopeConstants<Scalar> k(act, rho);
  rates.resize(d);

  Scalar total = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    rates[i] = k.rate(pot.channel_bound[i], s.v[i]);
    total += rates[i];
  }
  if (!std::isfinite(static_cast<double>(total))) throw std::runtime_error("non-finite total envelope rate");
  if (total <= Scalar(0)) return;

  if (rho == Scalar(-1) && params.count_first) {
    s.counters.envelope_mass += static_cast<double>(total * duration);
    const std::uint64_t m = poisson(rng, static_cast<double>(total * duration));
    if (m == 0) return;
    // Event times only matter for the log; they come from a child stream so
    // logging never changes the trajectory.
    Rng time_rng(rng());
    std::vector<double> times;
    if (log) {
      times.resize(m);
      for (auto& t : times) t = uniform_open(time_rng) * static_cast<double>(duration);
      std::sort(times.begin(), times.end());
    }
    for (std::uint64_t k = 0; k < m; ++k) {
      const Eigen::Index i = detail::pick_channel(rates, total, uniform_open(rng));
      ++s.counters.proposals;
      const Scalar theta = detail::evaluate_theta(pot, s.x, i, s.counters);
      const Scalar theta_bar = pot.channel_bound[i] / Scalar(2);
      const Scalar p = acceptance_prob(act, rho, theta, theta_bar, s.v[i], Scalar(0));
      const bool accepted = uniform_open(rng) < static_cast<double>(p);
      if (accepted) {
        s.v[i] = -s.v[i];
        ++s.counters.jumps;
      }
      if (log) log->push_back(JumpEvent{times[k], i, std::nullopt, static_cast<double>(p), accepted});
    }
    return;
  }

  const Scalar sq = k.sq;
  double t = 0.0;
  const double horizon = static_cast<double>(duration);
  for (;;) {
    const double dt = standard_exponential(rng) / static_cast<double>(total);
    if (t + dt > horizon) {
      s.counters.envelope_mass += static_cast<double>(total) * (horizon - t);
      break;
    }
    s.counters.envelope_mass += static_cast<double>(total) * dt;
    t += dt;
    const Eigen::Index i = detail::pick_channel(rates, total, uniform_open(rng));
    ++s.counters.proposals;
    const Scalar bound = pot.channel_bound[i];
    ChannelEnvelope<Scalar> env;
    env.channel = i;
    env.rho = rho;
    env.theta_bar = bound / Scalar(2);
    env.w_const = k.w_const(bound, s.v[i]);
    env.w_linear = k.w_linear(bound);
    env.rate = env.w_const + env.w_linear;
    const Scalar theta = detail::evaluate_theta(pot, s.x, i, s.counters);
    const bool flip = rho == Scalar(-1);
    const Scalar xi = flip ? Scalar(0) : sample_candidate(env, rng);
    const Scalar p = acceptance_prob(act, rho, theta, env.theta_bar, s.v[i], xi);
    const bool accepted = uniform_open(rng) < static_cast<double>(p);
    if (accepted) {
      s.v[i] = flip ? -s.v[i] : rho * s.v[i] + sq * xi;
      ++s.counters.jumps;
      rates[i] = k.rate(bound, s.v[i]);
      total = rates.sum();
      if (!std::isfinite(static_cast<double>(total))) throw std::runtime_error("non-finite total envelope rate");
    }
    if (log)
      log->push_back(JumpEvent{t, i, flip ? std::nullopt : std::optional<double>(static_cast<double>(xi)),
                               static_cast<double>(p), accepted});
  }
}

template <typename Scalar>
void simulate_jump_flow(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot,
                        const JumpParams<Scalar>& params, Scalar duration, Rng& rng,
                        std::vector<JumpEvent>* log = nullptr)
{
  VectorX<Scalar> rates(s.dim());
  simulate_jump_flow(s, pot, params, duration, rng, rates, log);
}

} // namespace vjlp

#endif // VJLP_JUMP_KERNEL_HPP

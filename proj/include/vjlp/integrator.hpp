#ifndef VJLP_INTEGRATOR_HPP
#define VJLP_INTEGRATOR_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "vjlp/jump_kernel.hpp"
#include "vjlp/model.hpp"
#include "vjlp/random.hpp"

namespace vjlp {

// ---------------------------------------------------------------------------
// Kernel sequence

enum class SubKernel : char { B = 'B', J = 'J', A = 'A', O = 'O' };

struct SubStep {
  SubKernel kernel;
  double fraction; // duration as a fraction of delta

  friend bool operator==(const SubStep&, const SubStep&) = default;
};

/// B(d/2) J(d/2) A(d/2) O(d) A(d/2) J(d/2) B(d/2)
inline constexpr std::array<SubStep, 7> kBjaoajb{{{SubKernel::B, 0.5},
                                                  {SubKernel::J, 0.5},
                                                  {SubKernel::A, 0.5},
                                                  {SubKernel::O, 1.0},
                                                  {SubKernel::A, 0.5},
                                                  {SubKernel::J, 0.5},
                                                  {SubKernel::B, 0.5}}};

inline constexpr std::array<SubStep, 5> kBaoab{
    {{SubKernel::B, 0.5}, {SubKernel::A, 0.5}, {SubKernel::O, 1.0}, {SubKernel::A, 0.5}, {SubKernel::B, 0.5}}};

inline bool is_palindromic(std::span<const SubStep> seq)
{
  for (std::size_t i = 0; i < seq.size() / 2; ++i)
    if (!(seq[i] == seq[seq.size() - 1 - i])) return false;
  return true;
}

/// Total duration spent in `kernel` per step, in units of delta.
inline double kernel_duration(std::span<const SubStep> seq, SubKernel kernel)
{
  double total = 0.0;
  for (const auto& s : seq)
    if (s.kernel == kernel) total += s.fraction;
  return total;
}

// ---------------------------------------------------------------------------
// Sub-kernels

/// Per-chain scratch buffers so the hot loop does not allocate. `force`
/// doubles as a cache of grad U0 at `force_x`: the closing kick of one step
/// and the opening kick of the next see the same position.
template <typename Scalar>
struct StepScratch {
  VectorX<Scalar> force;
  VectorX<Scalar> force_x;
  VectorX<Scalar> rates;
  bool force_valid = false;
  explicit StepScratch(Eigen::Index d = 0) : force(d), force_x(d), rates(d) {}
};

/// Kick: v <- v - h grad U0(x).
template <typename Scalar>
void step_b(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, Scalar h, VectorX<Scalar>& force)
{
  force.resize(s.dim());
  pot.grad_u0(s.x, force);
  ++s.counters.u0_evals;
  s.v.noalias() -= h * force;
}

template <typename Scalar>
void step_b(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, Scalar h)
{
  VectorX<Scalar> force(s.dim());
  step_b(s, pot, h, force);
}

/// Kick that reuses the cached force when x has not moved since it was
/// computed.
template <typename Scalar>
void step_b_cached(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, Scalar h,
                   StepScratch<Scalar>& scratch)
{
  if (!(scratch.force_valid && scratch.force_x == s.x)) {
    scratch.force.resize(s.dim());
    pot.grad_u0(s.x, scratch.force);
    ++s.counters.u0_evals;
    scratch.force_x = s.x;
    scratch.force_valid = true;
  }
  s.v.noalias() -= h * scratch.force;
}

/// Drift: x <- wrap(x + h v).
template <typename Scalar>
void step_a(PhaseState<Scalar>& s, const Space<Scalar>& space, Scalar h)
{
  s.x.noalias() += h * s.v;
  wrap_in_place(space, s.x);
}

/// Exact Ornstein-Uhlenbeck update: v <- e^{-gamma h} v + sqrt(1 - e^{-2 gamma h}) xi.
template <typename Scalar>
void step_o(PhaseState<Scalar>& s, Scalar gamma, Scalar h, Rng& rng)
{
  if (!(gamma > Scalar(0))) throw ContractViolation("friction gamma must be positive");
  if (!(h >= Scalar(0))) throw ContractViolation("O step duration must be nonnegative");
  const Scalar damp = std::exp(-gamma * h);
  // -expm1(-2 gamma h) keeps precision when gamma h is small
  const Scalar noise = std::sqrt(-std::expm1(Scalar(-2) * gamma * h));
  for (Eigen::Index i = 0; i < s.dim(); ++i)
    s.v[i] = damp * s.v[i] + noise * static_cast<Scalar>(standard_normal(rng));
}

// ---------------------------------------------------------------------------
// Full steps

/// Optional sink for jump events of both J sub-steps.
using EventSink = std::vector<JumpEvent>*;

/// One BJAOAJB transition. Each stochastic sub-kernel draws from the stream
/// keyed by (step, kernel tag); a J sub-step with zero envelope consumes
/// nothing.
template <typename Scalar>
void bjaoajb_step(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, const SchemeConfig<Scalar>& cfg,
                  const StreamFamily& streams, std::uint64_t step, StepScratch<Scalar>& scratch,
                  EventSink log = nullptr)
{
  const Scalar half = cfg.delta / Scalar(2);
  const JumpParams<Scalar> jp{cfg.activation, cfg.rho};

  step_b_cached(s, pot, half, scratch);
  {
    Rng rng = streams.substream(step, KernelTag::kJumpFirst);
    simulate_jump_flow(s, pot, jp, half, rng, scratch.rates, log);
  }
  step_a(s, pot.space, half);
  {
    Rng rng = streams.substream(step, KernelTag::kOrnsteinUhlenbeck);
    step_o(s, cfg.gamma, cfg.delta, rng);
  }
  step_a(s, pot.space, half);
  {
    Rng rng = streams.substream(step, KernelTag::kJumpSecond);
    const std::size_t mark = log ? log->size() : 0;
    simulate_jump_flow(s, pot, jp, half, rng, scratch.rates, log);
    // second-half event times are offset so the log is monotone within a step
    if (log)
      for (std::size_t k = mark; k < log->size(); ++k) (*log)[k].t += static_cast<double>(half);
  }
  step_b_cached(s, pot, half, scratch);
}

template <typename Scalar>
void bjaoajb_step(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, const SchemeConfig<Scalar>& cfg,
                  const StreamFamily& streams, std::uint64_t step)
{
  StepScratch<Scalar> scratch(s.dim());
  bjaoajb_step(s, pot, cfg, streams, step, scratch);
}

/// Which gradient BAOAB kicks with.
enum class BaoabForce {
  kFull,     // grad U0 + grad U1
  kCheapOnly // grad U0 alone
};

/// One BAOAB transition with the same stream layout as BJAOAJB.
template <typename Scalar>
void baoab_step(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, BaoabForce force_kind,
                const SchemeConfig<Scalar>& cfg, const StreamFamily& streams, std::uint64_t step,
                StepScratch<Scalar>& scratch)
{
  const Scalar half = cfg.delta / Scalar(2);
  auto kick = [&] {
    step_b_cached(s, pot, half, scratch);
    if (force_kind == BaoabForce::kFull) {
      for (Eigen::Index i = 0; i < s.dim(); ++i) {
        s.v[i] -= half * pot.partial_u1(s.x, i);
        ++s.counters.u1_evals;
      }
    }
  };
  kick();
  step_a(s, pot.space, half);
  {
    Rng rng = streams.substream(step, KernelTag::kOrnsteinUhlenbeck);
    step_o(s, cfg.gamma, cfg.delta, rng);
  }
  step_a(s, pot.space, half);
  kick();
}

template <typename Scalar>
void baoab_step(PhaseState<Scalar>& s, const SplitPotential<Scalar>& pot, BaoabForce force_kind,
                const SchemeConfig<Scalar>& cfg, const StreamFamily& streams, std::uint64_t step)
{
  StepScratch<Scalar> scratch(s.dim());
  baoab_step(s, pot, force_kind, cfg, streams, step, scratch);
}

// ---------------------------------------------------------------------------
// Trajectories

template <typename Scalar>
struct TrajectoryRow {
  std::uint64_t step = 0;
  double t = 0.0;
  VectorX<Scalar> x;
  VectorX<Scalar> v;
  EventCounters counters;
};

template <typename Scalar>
struct TrajectoryRecord {
  std::uint64_t stride = 1;
  std::vector<TrajectoryRow<Scalar>> rows;
};

/// Receives every post-step state (step 0 is the initial state).
template <typename Scalar>
using Observer = std::function<void(std::uint64_t step, const PhaseState<Scalar>&)>;

enum class Scheme { kBjaoajb, kBaoab };

struct RunOptions {
  std::uint64_t stride = 1;
  bool record = true;
  Scheme scheme = Scheme::kBjaoajb;
  BaoabForce baoab_force = BaoabForce::kFull;
  EventSink events = nullptr;
};

/// Iterates the chain n times from `init`. Observers see every state; the
/// record keeps every `stride`-th row plus the initial state. Throws
/// NumericalBlowup with the offending step on a non-finite state.
template <typename Scalar>
TrajectoryRecord<Scalar> run_trajectory(PhaseState<Scalar>& state, const SplitPotential<Scalar>& pot,
                                        const SchemeConfig<Scalar>& cfg, std::uint64_t n,
                                        std::span<const Observer<Scalar>> observers, const StreamFamily& streams,
                                        const RunOptions& opts = {})
{
  cfg.check();
  if (state.dim() != pot.dim()) throw ContractViolation("state dimension does not match the potential");
  if (opts.stride == 0) throw ContractViolation("stride must be positive");
  TrajectoryRecord<Scalar> rec;
  rec.stride = opts.stride;
  auto emit = [&](std::uint64_t k) {
    for (const auto& obs : observers) obs(k, state);
    if (opts.record && k % opts.stride == 0)
      rec.rows.push_back({k, static_cast<double>(cfg.delta) * static_cast<double>(k), state.x, state.v,
                          state.counters});
  };
  emit(0);
  StepScratch<Scalar> scratch(state.dim());
  for (std::uint64_t k = 1; k <= n; ++k) {
    if (opts.scheme == Scheme::kBjaoajb)
      bjaoajb_step(state, pot, cfg, streams, k, scratch, opts.events);
    else
      baoab_step(state, pot, opts.baoab_force, cfg, streams, k, scratch);
    if (!state.finite()) throw NumericalBlowup(k);
    emit(k);
  }
  return rec;
}

/// Header `step,t,x1..xd,v1..vd,proposals,jumps,u1_evals,u0_evals`.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord<double>& rec, Eigen::Index dim);
void write_trajectory_header(std::ostream& out, Eigen::Index dim);
void write_trajectory_row(std::ostream& out, const TrajectoryRow<double>& row);

} // namespace vjlp

#endif // VJLP_INTEGRATOR_HPP

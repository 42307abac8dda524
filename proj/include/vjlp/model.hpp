#ifndef VJLP_MODEL_HPP
#define VJLP_MODEL_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "vjlp/random.hpp"

namespace vjlp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = VectorX<double>;

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a preset's channel bound is smaller than the actual partial
/// derivative, which would make the thinning envelope invalid.
class BoundViolation : public std::runtime_error {
 public:
  BoundViolation(const std::string& what, int channel, double value, double bound)
      : std::runtime_error(what), channel_(channel), value_(value), bound_(bound)
  {}
  int channel() const noexcept { return channel_; }
  double value() const noexcept { return value_; }
  double bound() const noexcept { return bound_; }

 private:
  int channel_;
  double value_;
  double bound_;
};

/// Raised when a chain produces a non-finite coordinate.
class NumericalBlowup : public std::runtime_error {
 public:
  explicit NumericalBlowup(std::uint64_t step)
      : std::runtime_error("non-finite state at step " + std::to_string(step)), step_(step)
  {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

// ---------------------------------------------------------------------------
// Space

enum class SpaceKind { kEuclidean, kTorus };

template <typename Scalar>
struct Space {
  SpaceKind kind = SpaceKind::kEuclidean;
  VectorX<Scalar> period; // empty for euclidean

  static Space euclidean(Eigen::Index dim)
  {
    if (dim < 1) throw ContractViolation("space dimension must be >= 1");
    Space s;
    s.kind = SpaceKind::kEuclidean;
    s.dim_ = dim;
    return s;
  }

  static Space torus(const VectorX<Scalar>& period)
  {
    if (period.size() < 1) throw ContractViolation("space dimension must be >= 1");
    if ((period.array() <= Scalar(0)).any()) throw ContractViolation("torus period must be positive");
    Space s;
    s.kind = SpaceKind::kTorus;
    s.period = period;
    s.dim_ = period.size();
    return s;
  }

  /// Unit torus R^d / Z^d.
  static Space unit_torus(Eigen::Index dim)
  {
    return torus(VectorX<Scalar>::Ones(dim));
  }

  Eigen::Index dim() const noexcept { return dim_; }
  bool is_torus() const noexcept { return kind == SpaceKind::kTorus; }

 private:
  Eigen::Index dim_ = 1;
};

/// Canonical representative of x: identity on R^d, componentwise reduction
/// into [0, period) on a torus.
template <typename Scalar, typename Derived>
void wrap_in_place(const Space<Scalar>& space, Eigen::MatrixBase<Derived>& x)
{
  if (!space.is_torus()) return;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar p = space.period[i];
    Scalar r = x[i] - p * std::floor(x[i] / p);
    // floor can leave r == p when x[i] is a tiny negative number
    if (r >= p) r -= p;
    if (r < Scalar(0)) r = Scalar(0);
    x[i] = r;
  }
}

template <typename Scalar>
VectorX<Scalar> wrap_position(const Space<Scalar>& space, VectorX<Scalar> x)
{
  if (x.size() != space.dim()) throw ContractViolation("position dimension mismatch");
  wrap_in_place(space, x);
  return x;
}

// ---------------------------------------------------------------------------
// Activation

enum class ActivationKind { kSoftplus, kRelu };

/// Rate function with Psi(s) - Psi(-s) = s.
template <typename Scalar>
struct Activation {
  ActivationKind kind = ActivationKind::kSoftplus;
  Scalar scale = Scalar(1); // softplus a; unused for relu

  static Activation softplus(Scalar a)
  {
    if (!(a > Scalar(0))) throw ContractViolation("softplus scale must be positive");
    return Activation{ActivationKind::kSoftplus, a};
  }
  static Activation relu() { return Activation{ActivationKind::kRelu, Scalar(0)}; }

  /// Psi(0).
  Scalar psi0() const noexcept
  {
    return kind == ActivationKind::kSoftplus ? scale * std::numbers::ln2_v<Scalar> : Scalar(0);
  }
  /// sup |Psi'|.
  Scalar lip() const noexcept { return Scalar(1); }

  friend bool operator==(const Activation&, const Activation&) = default;
};

using ActivationD = Activation<double>;

template <typename Scalar>
inline Scalar psi(const Activation<Scalar>& act, Scalar s) noexcept
{
  if (act.kind == ActivationKind::kRelu) return s > Scalar(0) ? s : Scalar(0);
  // a log(1 + e^{s/a}) = max(s, 0) + a log1p(e^{-|s|/a})
  const Scalar z = s / act.scale;
  return (s > Scalar(0) ? s : Scalar(0)) + act.scale * std::log1p(std::exp(-std::abs(z)));
}

template <typename Scalar>
inline Scalar psi_prime(const Activation<Scalar>& act, Scalar s) noexcept
{
  if (act.kind == ActivationKind::kRelu) return s > Scalar(0) ? Scalar(1) : Scalar(0);
  const Scalar z = s / act.scale;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

// ---------------------------------------------------------------------------
// Potential

/// U = U0 + U1. U0 is integrated by the Langevin part and must be cheap; U1
/// is handled by velocity jumps, one channel per coordinate, and only its
/// partial derivatives and their sup bounds are needed.
template <typename Scalar>
struct SplitPotential {
  using Vector = VectorX<Scalar>;

  Space<Scalar> space;
  std::function<Scalar(const Vector&)> u0;
  std::function<void(const Vector&, Vector&)> grad_u0;
  std::function<Scalar(const Vector&, Eigen::Index)> partial_u1;
  /// M_i = sup_x |d_i U1(x)|
  Vector channel_bound;
  /// Optional U1 value, only needed for the Hamiltonian.
  std::function<Scalar(const Vector&)> u1;

  Eigen::Index dim() const noexcept { return space.dim(); }

  void check() const
  {
    if (!u0 || !grad_u0 || !partial_u1) throw ContractViolation("potential is missing a capability");
    if (channel_bound.size() != space.dim()) throw ContractViolation("channel bound dimension mismatch");
    if (!channel_bound.allFinite() || (channel_bound.array() < Scalar(0)).any())
      throw ContractViolation("channel bounds must be finite and nonnegative");
  }
};

using SplitPotentialD = SplitPotential<double>;

// ---------------------------------------------------------------------------
// State

struct EventCounters {
  std::uint64_t proposals = 0;
  std::uint64_t jumps = 0;
  std::uint64_t u1_evals = 0;
  std::uint64_t u0_evals = 0;
  /// Integral of the total envelope rate over all simulated jump time; its
  /// expectation equals the expected number of proposals.
  double envelope_mass = 0.0;

  friend bool operator==(const EventCounters&, const EventCounters&) = default;
};

template <typename Scalar>
struct PhaseState {
  VectorX<Scalar> x;
  VectorX<Scalar> v;
  EventCounters counters;

  PhaseState() = default;
  PhaseState(VectorX<Scalar> x_, VectorX<Scalar> v_) : x(std::move(x_)), v(std::move(v_))
  {
    if (x.size() != v.size()) throw ContractViolation("position and velocity dimensions differ");
  }

  static PhaseState zeros(Eigen::Index dim)
  {
    return PhaseState(VectorX<Scalar>::Zero(dim), VectorX<Scalar>::Zero(dim));
  }

  Eigen::Index dim() const noexcept { return x.size(); }
  bool finite() const noexcept { return x.allFinite() && v.allFinite(); }
};

using PhaseStateD = PhaseState<double>;

// ---------------------------------------------------------------------------
// Scheme parameters

template <typename Scalar>
struct SchemeConfig {
  Scalar gamma = Scalar(1);
  Scalar rho = Scalar(0);
  Scalar delta = Scalar(0.01);
  std::uint64_t n_steps = 1000;
  std::uint64_t seed = 1;
  Activation<Scalar> activation = Activation<Scalar>::softplus(Scalar(1));

  void check() const
  {
    if (!(gamma > Scalar(0))) throw ContractViolation("friction gamma must be positive");
    if (!(rho >= Scalar(-1) && rho < Scalar(1))) throw ContractViolation("rho must lie in [-1, 1)");
    if (!(delta >= Scalar(0)) || !std::isfinite(delta)) throw ContractViolation("step size must be nonnegative");
  }
};

using SchemeConfigD = SchemeConfig<double>;

// ---------------------------------------------------------------------------
// Operations

/// H(x, v) = U0(x) + U1(x) + |v|^2 / 2.
template <typename Scalar>
Scalar eval_hamiltonian(const SplitPotential<Scalar>& pot,
                        const std::function<Scalar(const VectorX<Scalar>&)>& u1_value,
                        const PhaseState<Scalar>& s)
{
  if (s.x.size() != pot.dim() || s.v.size() != pot.dim())
    throw ContractViolation("state dimension does not match the potential");
  const Scalar u1 = u1_value ? u1_value(s.x) : Scalar(0);
  return pot.u0(s.x) + u1 + Scalar(0.5) * s.v.squaredNorm();
}

template <typename Scalar>
Scalar eval_hamiltonian(const SplitPotential<Scalar>& pot, const PhaseState<Scalar>& s)
{
  return eval_hamiltonian(pot, pot.u1, s);
}

struct PeriodicityReport {
  bool passed = true;
  double max_violation = 0.0;
  std::string diagnostic;
};

/// Probes U0 and each d_i U1 at random points against their translates by one
/// period along every axis.
template <typename Scalar>
PeriodicityReport validate_periodicity(const SplitPotential<Scalar>& pot, int n_probes, Scalar tol,
                                       Rng& rng)
{
  if (!pot.space.is_torus()) throw ContractViolation("periodicity check requires a torus");
  const Eigen::Index d = pot.dim();
  PeriodicityReport report;
  VectorX<Scalar> x(d);
  for (int p = 0; p < n_probes; ++p) {
    for (Eigen::Index i = 0; i < d; ++i) x[i] = uniform_open(rng) * pot.space.period[i];
    for (Eigen::Index axis = 0; axis < d; ++axis) {
      VectorX<Scalar> shifted = x;
      shifted[axis] += pot.space.period[axis];
      const Scalar du0 = std::abs(pot.u0(x) - pot.u0(shifted));
      if (du0 > report.max_violation) {
        report.max_violation = static_cast<double>(du0);
        if (du0 > tol) report.diagnostic = "U0 not periodic along axis " + std::to_string(axis + 1);
      }
      for (Eigen::Index ch = 0; ch < d; ++ch) {
        const Scalar dp = std::abs(pot.partial_u1(x, ch) - pot.partial_u1(shifted, ch));
        if (dp > report.max_violation) {
          report.max_violation = static_cast<double>(dp);
          if (dp > tol)
            report.diagnostic = "d" + std::to_string(ch + 1) + "U1 not periodic along axis " +
                                std::to_string(axis + 1);
        }
      }
    }
  }
  report.passed = report.max_violation <= static_cast<double>(tol);
  return report;
}

} // namespace vjlp

#endif // VJLP_MODEL_HPP

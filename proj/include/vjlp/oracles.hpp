#ifndef VJLP_ORACLES_HPP
#define VJLP_ORACLES_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vjlp/model.hpp"
#include "vjlp/presets.hpp"

namespace vjlp {

/// Bumped whenever an oracle changes in a way that can move a frozen
/// reference value.
inline constexpr const char* kOracleVersion = "1.0";

/// Raised when a quadrature or grid oracle cannot certify its own accuracy.
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  Eigen::Index size() const noexcept { return nodes.size(); }
};

/// Gauss-Hermite rule for the standard normal weight: sum_k w_k f(x_k)
/// approximates E[f(Z)], Z ~ N(0, 1). Exact for polynomials of degree 2n-1.
/// Rules are cached per order.
const QuadratureRule& gauss_hermite(int n);

/// Gauss-Legendre rule on [-1, 1].
const QuadratureRule& gauss_legendre(int n);

/// Integral of f over [a, b] with `panels` equal panels of an `order`-point
/// Gauss-Legendre rule.
double composite_legendre(const std::function<double(double)>& f, double a, double b, int panels, int order = 16);

// ---------------------------------------------------------------------------
// Jump rates

/// (2/(1-rho)) E[s^k Psi(theta s)] for k = 0, 1, 2, with
/// s = (1-rho) v - sqrt(1-rho^2) xi and xi standard normal; s is the velocity
/// decrement v - V of a jump. m0 is the jump rate lambda.
struct JumpMoments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

using ScalarFunction = std::function<double(double)>;

/// Moments for an arbitrary rate function `rate_fn`; `kink` is a point of
/// the mark axis where the integrand may be non-smooth (ignored if not
/// finite). Gauss-Hermite with order doubling first; composite Gauss-Legendre
/// split at the kink as the fallback. Throws OracleFailure if neither
/// converges to 1e-10.
JumpMoments jump_moments(const ScalarFunction& rate_fn, double rho, double theta, double v);
JumpMoments jump_moments(const ActivationD& act, double rho, double theta, double v);

/// lambda_i = (2/(1-rho)) E[Psi(theta ((1-rho) v - sqrt(1-rho^2) xi))];
/// Psi(2 theta v) when rho = -1.
double lambda_exact(const ActivationD& act, double rho, double theta, double v);
double lambda_exact(const ScalarFunction& rate_fn, double rho, double theta, double v);

// ---------------------------------------------------------------------------
// Gibbs measure

/// Exact i.i.d. sampler for mu ~ exp(-U0 - U1 - |v|^2/2). gaussian2d is
/// closed form; torus1d and free use inverse-cdf sampling on a tabulated
/// density whose accuracy is checked against a twice finer table.
class GibbsSampler {
 public:
  explicit GibbsSampler(const Preset& preset, int grid_points = 10000);

  PhaseStateD sample(Rng& rng) const;
  double sample_position(Rng& rng) const; // torus presets only

  /// Max cdf difference between the table and its refinement.
  double refinement_error() const noexcept { return refinement_error_; }

 private:
  PresetKind kind_;
  Eigen::Index dim_ = 1;
  std::vector<double> cdf_;
  double refinement_error_ = 0.0;
};

// ---------------------------------------------------------------------------
// Observables and exact moments

/// Scalar function of (x, v). `uses_velocity` lets the quadrature skip the
/// velocity integral.
struct Observable {
  std::string name;
  std::function<double(const VectorXd& x, const VectorXd& v)> fn;
  bool uses_velocity = true;
};

/// Named observables: "cos2pi_x1", "x1", "x1^2", "y^2" (x2^2), "v1", "v1^2",
/// "v2^2", "kinetic". Throws ContractViolation on unknown names.
Observable make_observable(std::string_view name);

/// mu(f) by tensor quadrature with order doubling; tolerance 1e-10.
double exact_moment(const Preset& preset, const Observable& f);

// ---------------------------------------------------------------------------
// Stationarity residual

/// Observables with a hand-derived generator action.
enum class CatalogObservable {
  kVelocity,        // v_k
  kVelocitySquared, // v_k^2
  kPositionVelocity, // x_k v_k, euclidean only
  kSineVelocity,    // sin(2 pi x_k) v_k, torus only
};

struct CatalogEntry {
  CatalogObservable kind = CatalogObservable::kVelocity;
  Eigen::Index channel = 0;

  std::string name() const;
};

/// Parses "v1", "v1^2", "x1*v1", "sin(2pi x1)*v1" (any coordinate index).
/// Anything else is refused.
CatalogEntry parse_catalog_entry(std::string_view text);

/// Entries that apply to the preset's space, for every coordinate.
std::vector<CatalogEntry> catalog_for(const Preset& preset);

/// Generator of the velocity jump Langevin process applied to the catalog
/// observable at one phase point.
double generator_action(const SplitPotentialD& pot, const ActivationD& act, double gamma, double rho,
                        const CatalogEntry& f, const VectorXd& x, const VectorXd& v);

struct ResidualEstimate {
  double estimate = 0.0;
  double se = 0.0;
};

/// Monte Carlo average of (L f)(Z) over Z ~ mu.
ResidualEstimate stationarity_residual(const Preset& preset, const ActivationD& act, double gamma, double rho,
                                       const CatalogEntry& f, std::uint64_t n_mc, Rng& rng);

// ---------------------------------------------------------------------------
// Reference jump simulator

/// Direct simulation of the pure jump chain at frozen x: exact rates from
/// quadrature, exponential clocks, and post-jump marks by inverse-cdf
/// sampling of a 2^14-point grid. Slow by design. Increments counters.jumps
/// for each jump.
void gillespie_jump_reference(PhaseStateD& s, const SplitPotentialD& pot, const ActivationD& act, double rho,
                              double duration, Rng& rng);

/// Post-jump mark xi drawn from the density proportional to
/// Psi(theta ((1-rho) v - sqrt(1-rho^2) y)) phi(y) on a grid.
double sample_mark_by_grid(const ActivationD& act, double rho, double theta, double v, Rng& rng,
                           int grid_points = 1 << 14);

} // namespace vjlp

#endif // VJLP_ORACLES_HPP

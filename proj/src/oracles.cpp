#include "vjlp/oracles.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "vjlp/random.hpp"

namespace vjlp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kQuadratureTol = 1e-10;

bool close_enough(double a, double b, double tol = kQuadratureTol)
{
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

// Eigenvalues of the symmetric tridiagonal Jacobi matrix with zero diagonal.
Eigen::VectorXd jacobi_nodes(const Eigen::VectorXd& offdiag)
{
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) j(k, k + 1) = j(k + 1, k) = offdiag[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

QuadratureRule build_hermite(int n)
{
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  QuadratureRule rule;
  rule.nodes = jacobi_nodes(off);
  rule.weights.resize(n);
  // Orthonormal Hermite recurrence q_{k+1} = (x q_k - sqrt(k) q_{k-1}) / sqrt(k+1);
  // Newton on q_n polishes the eigenvalues, Christoffel numbers give weights.
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    double sum = 0.0;
    for (int iter = 0; iter < 3; ++iter) {
      double q_prev = 0.0, q = 1.0;
      sum = 1.0;
      for (int k = 0; k < n; ++k) {
        const double q_next = (x * q - std::sqrt(static_cast<double>(k)) * q_prev) / std::sqrt(k + 1.0);
        q_prev = q;
        q = q_next;
        if (k + 1 < n) sum += q * q;
      }
      const double dq = std::sqrt(static_cast<double>(n)) * q_prev;
      x -= q / dq;
    }
    rule.nodes[i] = x;
    double q_prev = 0.0, q = 1.0;
    sum = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double q_next = (x * q - std::sqrt(static_cast<double>(k)) * q_prev) / std::sqrt(k + 1.0);
      q_prev = q;
      q = q_next;
      sum += q * q;
    }
    rule.weights[i] = 1.0 / sum;
  }
  return rule;
}

QuadratureRule build_legendre(int n)
{
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  QuadratureRule rule;
  rule.nodes = jacobi_nodes(off);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    double dp = 1.0;
    for (int iter = 0; iter < 3; ++iter) {
      double p_prev = 1.0, p = x;
      for (int k = 1; k < n; ++k) {
        const double p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
        p_prev = p;
        p = p_next;
      }
      dp = n * (x * p - p_prev) / (x * x - 1.0);
      x -= p / dp;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const QuadratureRule& cached_rule(std::map<int, QuadratureRule>& cache, int n, QuadratureRule (*build)(int))
{
  static std::mutex mutex;
  if (n < 1) throw ContractViolation("quadrature order must be positive");
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

} // namespace

const QuadratureRule& gauss_hermite(int n)
{
  static std::map<int, QuadratureRule> cache;
  return cached_rule(cache, n, build_hermite);
}

const QuadratureRule& gauss_legendre(int n)
{
  static std::map<int, QuadratureRule> cache;
  return cached_rule(cache, n, build_legendre);
}

double composite_legendre(const std::function<double(double)>& f, double a, double b, int panels, int order)
{
  const QuadratureRule& rule = gauss_legendre(order);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double part = 0.0;
    for (Eigen::Index k = 0; k < rule.size(); ++k) part += rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]);
    total += 0.5 * h * part;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Jump moments

namespace {

template <typename Rate>
JumpMoments hermite_moments(const Rate& rate, double a, double b, double theta, int n)
{
  const QuadratureRule& rule = gauss_hermite(n);
  JumpMoments m;
  for (Eigen::Index k = 0; k < rule.size(); ++k) {
    const double s = a - b * rule.nodes[k];
    const double w = rule.weights[k] * rate(theta * s);
    m.m0 += w;
    m.m1 += w * s;
    m.m2 += w * s * s;
  }
  return m;
}

template <typename Rate>
JumpMoments legendre_moments(const Rate& rate, double a, double b, double theta, double lo, double hi,
                             int panels)
{
  const QuadratureRule& rule = gauss_legendre(16);
  const double h = (hi - lo) / panels;
  JumpMoments m;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (Eigen::Index k = 0; k < rule.size(); ++k) {
      const double xi = mid + 0.5 * h * rule.nodes[k];
      const double s = a - b * xi;
      const double w = 0.5 * h * rule.weights[k] * std::exp(-0.5 * xi * xi) / std::sqrt(kTwoPi) * rate(theta * s);
      m.m0 += w;
      m.m1 += w * s;
      m.m2 += w * s * s;
    }
  }
  return m;
}

bool moments_close(const JumpMoments& x, const JumpMoments& y)
{
  constexpr double tol = 1e-13;
  return close_enough(x.m0, y.m0, tol) && close_enough(x.m1, y.m1, tol) && close_enough(x.m2, y.m2, tol);
}

JumpMoments add(JumpMoments x, const JumpMoments& y)
{
  x.m0 += y.m0;
  x.m1 += y.m1;
  x.m2 += y.m2;
  return x;
}

template <typename Rate>
JumpMoments moments_impl(const Rate& rate, double rho, double theta, double v)
{
  if (!(rho >= -1.0 && rho < 1.0)) throw ContractViolation("rho must lie in [-1, 1)");
  if (rho == -1.0) {
    const double s = 2.0 * v;
    const double r = rate(theta * s);
    return {r, s * r, s * s * r};
  }
  const double a = (1.0 - rho) * v;
  const double b = std::sqrt(1.0 - rho * rho);
  const double pref = 2.0 / (1.0 - rho);
  auto scaled = [pref](JumpMoments m) {
    m.m0 *= pref;
    m.m1 *= pref;
    m.m2 *= pref;
    return m;
  };

  const JumpMoments coarse = hermite_moments(rate, a, b, theta, 64);
  const JumpMoments fine = hermite_moments(rate, a, b, theta, 128);
  if (moments_close(coarse, fine)) return scaled(fine);

  // Non-smooth rate: integrate each side of the kink s = 0 separately.
  const double kink = a / b;
  const double lo = std::min(-12.0, kink - 12.0);
  const double hi = std::max(12.0, kink + 12.0);
  const double split = std::clamp(kink, lo, hi);
  auto both_sides = [&](int panels) {
    return add(legendre_moments(rate, a, b, theta, lo, split, panels),
               legendre_moments(rate, a, b, theta, split, hi, panels));
  };
  JumpMoments prev = both_sides(4);
  for (int panels = 8; panels <= 4096; panels *= 2) {
    const JumpMoments next = both_sides(panels);
    if (moments_close(prev, next)) return scaled(next);
    prev = next;
  }
  throw OracleFailure("jump rate quadrature did not converge");
}

} // namespace

JumpMoments jump_moments(const ScalarFunction& rate_fn, double rho, double theta, double v)
{
  return moments_impl(rate_fn, rho, theta, v);
}

JumpMoments jump_moments(const ActivationD& act, double rho, double theta, double v)
{
  return moments_impl([&act](double s) { return psi(act, s); }, rho, theta, v);
}

double lambda_exact(const ActivationD& act, double rho, double theta, double v)
{
  return jump_moments(act, rho, theta, v).m0;
}

double lambda_exact(const ScalarFunction& rate_fn, double rho, double theta, double v)
{
  return jump_moments(rate_fn, rho, theta, v).m0;
}

// ---------------------------------------------------------------------------
// Gibbs sampler

namespace {

double total_potential(const SplitPotentialD& pot, const VectorXd& x)
{
  return pot.u0(x) + (pot.u1 ? pot.u1(x) : 0.0);
}

// Cumulative mass of exp(-U) over `cells` equal cells of [0, 1), normalized.
std::vector<double> torus_cdf(const SplitPotentialD& pot, int cells)
{
  const QuadratureRule& rule = gauss_legendre(8);
  std::vector<double> cdf(static_cast<std::size_t>(cells) + 1, 0.0);
  VectorXd x(1);
  const double h = 1.0 / cells;
  for (int j = 0; j < cells; ++j) {
    double mass = 0.0;
    for (Eigen::Index k = 0; k < rule.size(); ++k) {
      x[0] = (j + 0.5) * h + 0.5 * h * rule.nodes[k];
      mass += rule.weights[k] * std::exp(-total_potential(pot, x));
    }
    cdf[j + 1] = cdf[j] + 0.5 * h * mass;
  }
  const double z = cdf.back();
  for (double& c : cdf) c /= z;
  return cdf;
}

double interpolate_cdf(const std::vector<double>& cdf, double x)
{
  const double cells = static_cast<double>(cdf.size() - 1);
  const double pos = std::clamp(x, 0.0, 1.0) * cells;
  const auto j = std::min(static_cast<std::size_t>(pos), cdf.size() - 2);
  const double frac = pos - static_cast<double>(j);
  return cdf[j] + frac * (cdf[j + 1] - cdf[j]);
}

} // namespace

GibbsSampler::GibbsSampler(const Preset& preset, int grid_points)
    : kind_(preset.kind), dim_(preset.potential.dim())
{
  if (kind_ == PresetKind::kGaussian2d) return;
  if (dim_ != 1 || !preset.potential.space.is_torus() || preset.potential.space.period[0] != 1.0)
    throw ContractViolation("Gibbs sampler supports the unit circle only");
  if (grid_points < 2) throw ContractViolation("Gibbs sampler grid needs at least two points");
  cdf_ = torus_cdf(preset.potential, grid_points);
  const std::vector<double> finer = torus_cdf(preset.potential, 2 * grid_points);
  for (std::size_t j = 0; j < finer.size(); ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(finer.size() - 1);
    refinement_error_ = std::max(refinement_error_, std::abs(interpolate_cdf(cdf_, x) - finer[j]));
  }
  if (refinement_error_ > 1e-7) throw OracleFailure("Gibbs position table is not converged under refinement");
}

double GibbsSampler::sample_position(Rng& rng) const
{
  if (cdf_.empty()) throw ContractViolation("position table exists for torus presets only");
  const double u = uniform_open(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin() - 1, 0,
                                                                     static_cast<std::ptrdiff_t>(cdf_.size()) - 2));
  const double width = cdf_[j + 1] - cdf_[j];
  const double frac = width > 0.0 ? (u - cdf_[j]) / width : 0.5;
  const double x = (static_cast<double>(j) + std::clamp(frac, 0.0, 1.0)) / static_cast<double>(cdf_.size() - 1);
  return x < 1.0 ? x : 0.0;
}

PhaseStateD GibbsSampler::sample(Rng& rng) const
{
  PhaseStateD s = PhaseStateD::zeros(dim_);
  if (kind_ == PresetKind::kGaussian2d) {
    s.x[0] = standard_normal(rng);
    s.x[1] = standard_normal(rng) / std::sqrt(11.0);
  } else {
    s.x[0] = sample_position(rng);
  }
  for (Eigen::Index i = 0; i < dim_; ++i) s.v[i] = standard_normal(rng);
  return s;
}

// ---------------------------------------------------------------------------
// Observables

Observable make_observable(std::string_view name)
{
  using V = const VectorXd&;
  if (name == "cos2pi_x1") return {"cos2pi_x1", [](V x, V) { return std::cos(kTwoPi * x[0]); }, false};
  if (name == "x1") return {"x1", [](V x, V) { return x[0]; }, false};
  if (name == "x1^2") return {"x1^2", [](V x, V) { return x[0] * x[0]; }, false};
  if (name == "y^2" || name == "x2^2")
    return {std::string(name), [](V x, V) {
              if (x.size() < 2) throw ContractViolation("observable needs a second coordinate");
              return x[1] * x[1];
            },
            false};
  if (name == "v1") return {"v1", [](V, V v) { return v[0]; }, true};
  if (name == "v1^2") return {"v1^2", [](V, V v) { return v[0] * v[0]; }, true};
  if (name == "v2^2")
    return {"v2^2", [](V, V v) {
              if (v.size() < 2) throw ContractViolation("observable needs a second coordinate");
              return v[1] * v[1];
            },
            true};
  if (name == "kinetic") return {"kinetic", [](V, V v) { return 0.5 * v.squaredNorm(); }, true};
  throw ContractViolation("unknown observable '" + std::string(name) + "'");
}

namespace {

// One tensor-quadrature evaluation of mu(f) at refinement level `level`.
double moment_at_level(const Preset& preset, const Observable& f, int level)
{
  const SplitPotentialD& pot = preset.potential;
  const Eigen::Index d = pot.dim();
  const int vel_order = f.uses_velocity ? 8 << level : 1;
  const QuadratureRule& vel = gauss_hermite(vel_order);

  VectorXd x(d), v = VectorXd::Zero(d);
  auto velocity_average = [&]() {
    if (!f.uses_velocity) return f.fn(x, v);
    double total = 0.0;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      double w = 1.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        v[i] = vel.nodes[idx[i]];
        w *= vel.weights[idx[i]];
      }
      total += w * f.fn(x, v);
      Eigen::Index i = 0;
      while (i < d && ++idx[i] == vel.size()) idx[i++] = 0;
      if (i == d) break;
    }
    return total;
  };

  if (preset.kind == PresetKind::kGaussian2d) {
    const QuadratureRule& pos = gauss_hermite(16 << level);
    double total = 0.0;
    for (Eigen::Index i = 0; i < pos.size(); ++i)
      for (Eigen::Index j = 0; j < pos.size(); ++j) {
        x[0] = pos.nodes[i];
        x[1] = pos.nodes[j] / std::sqrt(11.0);
        total += pos.weights[i] * pos.weights[j] * velocity_average();
      }
    return total;
  }

  if (d != 1) throw ContractViolation("exact moments on the torus are implemented for d = 1");
  const int panels = 8 << level;
  double num = 0.0, z = 0.0;
  const QuadratureRule& rule = gauss_legendre(16);
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p)
    for (Eigen::Index k = 0; k < rule.size(); ++k) {
      x[0] = (p + 0.5) * h + 0.5 * h * rule.nodes[k];
      const double w = 0.5 * h * rule.weights[k] * std::exp(-total_potential(pot, x));
      z += w;
      num += w * velocity_average();
    }
  return num / z;
}

} // namespace

double exact_moment(const Preset& preset, const Observable& f)
{
  if (preset.potential.dim() > 2) throw ContractViolation("exact moments need d <= 2");
  double prev = moment_at_level(preset, f, 0);
  for (int level = 1; level <= 3; ++level) {
    const double next = moment_at_level(preset, f, level);
    if (close_enough(prev, next)) return next;
    prev = next;
  }
  throw OracleFailure("exact moment quadrature did not converge for " + f.name);
}

// ---------------------------------------------------------------------------
// Stationarity residual

std::string CatalogEntry::name() const
{
  const std::string k = std::to_string(channel + 1);
  switch (kind) {
  case CatalogObservable::kVelocity: return "v" + k;
  case CatalogObservable::kVelocitySquared: return "v" + k + "^2";
  case CatalogObservable::kPositionVelocity: return "x" + k + "*v" + k;
  case CatalogObservable::kSineVelocity: return "sin(2pi x" + k + ")*v" + k;
  }
  return {};
}

CatalogEntry parse_catalog_entry(std::string_view text)
{
  for (Eigen::Index k = 0; k < 64; ++k)
    for (auto kind : {CatalogObservable::kVelocity, CatalogObservable::kVelocitySquared,
                      CatalogObservable::kPositionVelocity, CatalogObservable::kSineVelocity}) {
      const CatalogEntry e{kind, k};
      if (e.name() == text) return e;
    }
  throw ContractViolation("observable '" + std::string(text) + "' is not in the generator catalog");
}

std::vector<CatalogEntry> catalog_for(const Preset& preset)
{
  std::vector<CatalogEntry> out;
  const bool torus = preset.potential.space.is_torus();
  for (Eigen::Index k = 0; k < preset.potential.dim(); ++k) {
    out.push_back({CatalogObservable::kVelocity, k});
    out.push_back({CatalogObservable::kVelocitySquared, k});
    out.push_back({torus ? CatalogObservable::kSineVelocity : CatalogObservable::kPositionVelocity, k});
  }
  return out;
}

namespace {

double generator_with(const CatalogEntry& f, double gamma, double grad_k, const JumpMoments& m, double xk,
                      double vk)
{
  switch (f.kind) {
  case CatalogObservable::kVelocity: return -grad_k - gamma * vk - m.m1;
  case CatalogObservable::kVelocitySquared:
    return -2.0 * vk * grad_k - 2.0 * gamma * vk * vk + 2.0 * gamma - 2.0 * vk * m.m1 + m.m2;
  case CatalogObservable::kPositionVelocity: return vk * vk - xk * grad_k - gamma * xk * vk - xk * m.m1;
  case CatalogObservable::kSineVelocity: {
    const double sn = std::sin(kTwoPi * xk), cs = std::cos(kTwoPi * xk);
    return kTwoPi * cs * vk * vk - sn * grad_k - gamma * sn * vk - sn * m.m1;
  }
  }
  return 0.0;
}

void check_entry(const SplitPotentialD& pot, const CatalogEntry& f)
{
  if (f.channel < 0 || f.channel >= pot.dim()) throw ContractViolation("catalog observable coordinate out of range");
  if (f.kind == CatalogObservable::kPositionVelocity && pot.space.is_torus())
    throw ContractViolation("x*v is not a function on the torus");
  if (f.kind == CatalogObservable::kSineVelocity &&
      (!pot.space.is_torus() || pot.space.period[f.channel] != 1.0))
    throw ContractViolation("sin(2 pi x) v needs a unit-period torus coordinate");
}

} // namespace

double generator_action(const SplitPotentialD& pot, const ActivationD& act, double gamma, double rho,
                        const CatalogEntry& f, const VectorXd& x, const VectorXd& v)
{
  check_entry(pot, f);
  VectorXd grad(pot.dim());
  pot.grad_u0(x, grad);
  const double theta = 0.5 * pot.partial_u1(x, f.channel);
  const JumpMoments m = jump_moments(act, rho, theta, v[f.channel]);
  return generator_with(f, gamma, grad[f.channel], m, x[f.channel], v[f.channel]);
}

ResidualEstimate stationarity_residual(const Preset& preset, const ActivationD& act, double gamma, double rho,
                                       const CatalogEntry& f, std::uint64_t n_mc, Rng& rng)
{
  if (n_mc < 2) throw ContractViolation("stationarity residual needs at least two samples");
  check_entry(preset.potential, f);
  const GibbsSampler sampler(preset);
  double mean = 0.0, m2 = 0.0;
  VectorXd grad(preset.potential.dim());
  for (std::uint64_t k = 0; k < n_mc; ++k) {
    const PhaseStateD z = sampler.sample(rng);
    preset.potential.grad_u0(z.x, grad);
    const double theta = 0.5 * preset.potential.partial_u1(z.x, f.channel);
    const JumpMoments m = jump_moments(act, rho, theta, z.v[f.channel]);
    const double value = generator_with(f, gamma, grad[f.channel], m, z.x[f.channel], z.v[f.channel]);
    // Welford
    const double delta = value - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (value - mean);
  }
  const double n = static_cast<double>(n_mc);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

// ---------------------------------------------------------------------------
// Gillespie reference

double sample_mark_by_grid(const ActivationD& act, double rho, double theta, double v, Rng& rng, int grid_points)
{
  if (!(rho > -1.0 && rho < 1.0)) throw ContractViolation("grid mark sampler needs rho in (-1, 1)");
  if (grid_points < 16) throw ContractViolation("grid mark sampler needs at least 16 points");
  const double a = (1.0 - rho) * v;
  const double b = std::sqrt(1.0 - rho * rho);

  auto density = [&](const Eigen::ArrayXd& y) -> Eigen::ArrayXd {
    const Eigen::ArrayXd arg = theta * (a - b * y);
    Eigen::ArrayXd rate;
    if (act.kind == ActivationKind::kRelu)
      rate = arg.max(0.0);
    else
      rate = arg.max(0.0) + act.scale * (-(arg.abs() / act.scale)).exp().log1p();
    return rate * (-0.5 * y.square()).exp();
  };

  // Widen the window until both end densities are negligible.
  double half = 10.0;
  Eigen::ArrayXd y, q;
  for (int attempt = 0;; ++attempt) {
    y = Eigen::ArrayXd::LinSpaced(grid_points, -half, half);
    q = density(y);
    const double peak = q.maxCoeff();
    if (!(peak > 0.0) || !std::isfinite(peak)) throw OracleFailure("mark density vanishes or is not finite");
    if (std::max(q[0], q[grid_points - 1]) <= 1e-16 * peak) break;
    if (attempt == 6) throw OracleFailure("mark density tails do not decay");
    half *= 1.5;
  }

  const double h = y[1] - y[0];
  std::vector<double> cdf(static_cast<std::size_t>(grid_points), 0.0);
  for (int j = 1; j < grid_points; ++j) {
    cdf[j] = cdf[j - 1] + 0.5 * h * (q[j - 1] + q[j]);
    if (!(cdf[j] >= cdf[j - 1])) throw OracleFailure("mark cdf is not monotone");
  }
  const double u = uniform_open(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf.begin() - 1, 0, grid_points - 2));
  const double width = cdf[j + 1] - cdf[j];
  const double frac = width > 0.0 ? (u - cdf[j]) / width : 0.5;
  return y[static_cast<Eigen::Index>(j)] + frac * h;
}

void gillespie_jump_reference(PhaseStateD& s, const SplitPotentialD& pot, const ActivationD& act, double rho,
                              double duration, Rng& rng)
{
  if (!(duration >= 0.0)) throw ContractViolation("jump flow duration must be nonnegative");
  if (pot.dim() > 2) throw ContractViolation("reference jump simulator supports d <= 2");
  const Eigen::Index d = s.dim();
  VectorXd theta(d), rates(d);
  for (Eigen::Index i = 0; i < d; ++i) theta[i] = 0.5 * pot.partial_u1(s.x, i);
  double t = 0.0;
  for (;;) {
    for (Eigen::Index i = 0; i < d; ++i) rates[i] = lambda_exact(act, rho, theta[i], s.v[i]);
    const double total = rates.sum();
    if (!(total > 0.0)) return;
    t += standard_exponential(rng) / total;
    if (t > duration) return;
    double target = uniform_open(rng) * total;
    Eigen::Index i = 0;
    while (i + 1 < d && target >= rates[i]) target -= rates[i++];
    if (rho == -1.0)
      s.v[i] = -s.v[i];
    else
      s.v[i] = rho * s.v[i] + std::sqrt(1.0 - rho * rho) * sample_mark_by_grid(act, rho, theta[i], s.v[i], rng);
    ++s.counters.jumps;
  }
}

} // namespace vjlp

#include "vjlp/presets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vjlp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SplitPotentialD gaussian2d(const PresetParams& p)
{
  if (!(p.box > 0.0)) throw ContractViolation("gaussian2d box half-width must be positive");
  SplitPotentialD pot;
  pot.space = Space<double>::euclidean(2);
  pot.u0 = [](const VectorXd& x) { return 0.5 * x.squaredNorm(); };
  pot.grad_u0 = [](const VectorXd& x, VectorXd& out) { out = x; };
  pot.u1 = [](const VectorXd& x) { return 5.0 * x[1] * x[1]; };
  pot.partial_u1 = [](const VectorXd& x, Eigen::Index i) { return i == 1 ? 10.0 * x[1] : 0.0; };
  pot.channel_bound = VectorXd::Zero(2);
  pot.channel_bound[1] = 10.0 * p.box;
  return pot;
}

SplitPotentialD torus1d(double c, double eps)
{
  SplitPotentialD pot;
  pot.space = Space<double>::unit_torus(1);
  pot.u0 = [c](const VectorXd& x) { return c * (1.0 - std::cos(kTwoPi * x[0])); };
  pot.grad_u0 = [c](const VectorXd& x, VectorXd& out) {
    out.resize(1);
    out[0] = kTwoPi * c * std::sin(kTwoPi * x[0]);
  };
  pot.u1 = [eps](const VectorXd& x) { return eps * std::sin(kTwoPi * x[0]); };
  pot.partial_u1 = [eps](const VectorXd& x, Eigen::Index) { return kTwoPi * eps * std::cos(kTwoPi * x[0]); };
  pot.channel_bound = VectorXd::Constant(1, kTwoPi * std::abs(eps));
  return pot;
}

} // namespace

Preset make_preset(std::string_view name, const PresetParams& params)
{
  Preset preset;
  preset.name = std::string(name);
  preset.params = params;
  if (name == "gaussian2d") {
    preset.kind = PresetKind::kGaussian2d;
    preset.potential = gaussian2d(params);
  } else if (name == "torus1d") {
    preset.kind = PresetKind::kTorus1d;
    preset.potential = torus1d(params.c, params.epsilon);
  } else if (name == "free") {
    preset.kind = PresetKind::kFree;
    preset.params.epsilon = 0.0;
    preset.potential = torus1d(params.c, 0.0);
  } else {
    throw ContractViolation("unknown preset '" + std::string(name) + "'");
  }
  preset.potential.check();
  return preset;
}

std::vector<std::string> preset_names() { return {"gaussian2d", "torus1d", "free"}; }

Preset with_scaled_bound(Preset preset, double factor)
{
  preset.potential.channel_bound *= factor;
  return preset;
}

} // namespace vjlp

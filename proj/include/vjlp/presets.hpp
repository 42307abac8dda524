#ifndef VJLP_PRESETS_HPP
#define VJLP_PRESETS_HPP

#include <string>
#include <string_view>
#include <vector>

#include "vjlp/model.hpp"

namespace vjlp {

/// Tunable preset constants.
///   c        U0 amplitude of torus1d / free
///   epsilon  U1 amplitude of torus1d
///   box      half-width of the y-box over which the gaussian2d channel
///            bound is taken
struct PresetParams {
  double c = 0.25;
  double epsilon = 0.25;
  double box = 5.0;

  friend bool operator==(const PresetParams&, const PresetParams&) = default;
};

enum class PresetKind { kGaussian2d, kTorus1d, kFree };

/// Catalog:
///
///  gaussian2d  U = (x^2 + 11 y^2)/2 on R^2 split as U0 = (x^2 + y^2)/2,
///              U1 = 5 y^2. d_y U1 = 10 y is unbounded; the channel bound
///              10 * box only holds while |y| <= box, and a chain leaving the
///              box fails with BoundViolation.
///  torus1d     U0 = c (1 - cos 2 pi x), U1 = epsilon sin 2 pi x on the unit
///              circle; M_1 = 2 pi |epsilon| is the exact sup.
///  free        torus1d with U1 = 0 (reduction and baseline runs).
struct Preset {
  std::string name;
  PresetKind kind = PresetKind::kTorus1d;
  PresetParams params;
  SplitPotentialD potential;
};

Preset make_preset(std::string_view name, const PresetParams& params = {});

std::vector<std::string> preset_names();

/// Copy of `preset` with every channel bound multiplied by `factor`. Used to
/// inject a wrong bound in validation runs.
Preset with_scaled_bound(Preset preset, double factor);

} // namespace vjlp

#endif // VJLP_PRESETS_HPP

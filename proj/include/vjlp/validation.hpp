#ifndef VJLP_VALIDATION_HPP
#define VJLP_VALIDATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vjlp/model.hpp"
#include "vjlp/presets.hpp"

namespace vjlp {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::json metrics = nlohmann::json::object();
};

nlohmann::json to_json(const CheckResult& c);

/// max |Psi(s) - Psi(-s) - s| over random s in [-50, 50] for relu and
/// softplus a in {0.5, 1, 2}; passes at 1e-12.
CheckResult check_psi_identity(int samples, std::uint64_t seed);

/// |Psi(s1) - Psi(s2)| <= lip |s1 - s2| and softplus asymptotes.
CheckResult check_psi_lipschitz(int samples, std::uint64_t seed);

/// Random (activation, rho, theta, theta_bar, v, xi) tuples with
/// |theta| <= theta_bar: lambda_exact <= envelope rate and acceptance
/// probability in [0, 1].
CheckResult check_envelope(std::uint64_t tuples, std::uint64_t seed);

/// w_const + w_linear against the closed-form bound written out directly.
CheckResult check_rate_identity(std::uint64_t tuples, std::uint64_t seed);

/// Terminal velocities of the thinning simulator and of the Gillespie
/// reference over `duration`, from independent exact Gibbs initial states;
/// two-sample KS on v1 must exceed p = 0.01.
CheckResult check_thinning_vs_reference(const Preset& preset, const ActivationD& act, double rho, double duration,
                                        std::uint64_t replicas, std::uint64_t seed);

/// Poisson-count and sequential-clock samplers for rho = -1 agree (KS).
CheckResult check_flip_paths(const Preset& preset, const ActivationD& act, double duration, std::uint64_t replicas,
                             std::uint64_t seed);

/// |stationarity residual| < 3 SE for every catalog observable.
CheckResult check_stationarity(const Preset& preset, const ActivationD& act, double gamma, double rho,
                               std::uint64_t n_mc, std::uint64_t seed);

CheckResult check_periodicity(const Preset& preset, int probes, std::uint64_t seed);

/// |d_i U1(x)| <= M_i at random positions (inside the box for gaussian2d).
CheckResult check_channel_bounds(const Preset& preset, int samples, std::uint64_t seed);

/// Runs the chain and reports a BoundViolation as a failure.
CheckResult check_chain_bounds(const Preset& preset, const SchemeConfigD& cfg, std::uint64_t steps);

/// relu and U1 = 0: BJAOAJB and BAOAB states agree bit for bit.
CheckResult check_baoab_reduction(std::uint64_t steps, std::uint64_t seed);

/// u1 evaluations equal proposals, and proposals per step agree with the
/// integrated envelope rate within 3 SE.
CheckResult check_proposal_accounting(const Preset& preset, const SchemeConfigD& cfg, std::uint64_t steps);

} // namespace vjlp

#endif // VJLP_VALIDATION_HPP

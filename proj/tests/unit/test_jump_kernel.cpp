#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "vjlp/jump_kernel.hpp"
#include "vjlp/oracles.hpp"
#include "vjlp/presets.hpp"
#include "vjlp/stats.hpp"

using namespace vjlp;

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

// The displayed bound written out term by term.
double bound_formula(const ActivationD& act, double rho, double m, double v)
{
  return (2.0 * act.psi0() + act.lip() * m * ((1 - rho) * std::abs(v) + std::sqrt(2 * (1 - rho * rho) / std::numbers::pi))) /
         (1 - rho);
}

} // namespace

TEST_CASE("envelope rate examples")
{
  const auto sp = ActivationD::softplus(1.0);
  const auto env = envelope_rate(sp, 0.0, 1.0, 0.0);
  CHECK(env.rate == doctest::Approx(2 * std::numbers::ln2 + kSqrt2OverPi).epsilon(1e-14));
  CHECK(env.rate == doctest::Approx(2.184179).epsilon(1e-6));
  CHECK(env.theta_bar == 0.5);

  const auto flip = envelope_rate(ActivationD::relu(), -1.0, 2.0, 3.0);
  CHECK(flip.rate == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(flip.w_linear == 0.0);

  for (double rho : {-1.0, 0.0, 0.5, 0.99})
    for (double v : {-2.0, 0.0, 4.0}) CHECK(envelope_rate(ActivationD::relu(), rho, 0.0, v).rate == 0.0);

  CHECK_THROWS_AS(envelope_rate(sp, 1.0, 1.0, 0.0), ContractViolation);
  CHECK_THROWS_AS(envelope_rate(sp, 1.5, 1.0, 0.0), ContractViolation);
  CHECK_THROWS_AS(envelope_rate(sp, -1.5, 1.0, 0.0), ContractViolation);
}

TEST_CASE("rate identity against the displayed bound")
{
  Rng rng(3);
  for (int k = 0; k < 20000; ++k) {
    const ActivationD act = k % 2 ? ActivationD::relu() : ActivationD::softplus(0.1 + 3 * uniform_open(rng));
    const double rho = k % 7 == 0 ? -1.0 : -1.0 + 1.999 * uniform_open(rng);
    const double m = 10 * uniform_open(rng);
    const double v = 8 * (uniform_open(rng) - 0.5);
    const auto env = envelope_rate(act, rho, m, v);
    const double f = bound_formula(act, rho, m, v);
    CHECK(std::abs(env.rate - f) <= 1e-12 * std::max(1.0, f));
    CHECK(env.rate == env.w_const + env.w_linear);
    // flip invariance of the envelope
    CHECK(envelope_rate(act, rho, m, -v).rate == env.rate);
  }
}

TEST_CASE("candidate sampler components")
{
  SUBCASE("constant component only is standard normal")
  {
    const auto env = envelope_rate(ActivationD::softplus(1.0), 0.0, 0.0, 1.0);
    REQUIRE(env.w_linear == 0.0);
    Rng rng(5);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = sample_candidate(env, rng);
    CHECK(ks_one_sample(xs, normal_cdf).p_value > 0.01);
  }
  SUBCASE("linear component only has Rayleigh magnitude")
  {
    const auto env = envelope_rate(ActivationD::relu(), 0.0, 2.0, 0.0);
    REQUIRE(env.w_const == 0.0);
    Rng rng(6);
    std::vector<double> mags(100000);
    int positive = 0;
    for (auto& m : mags) {
      const double x = sample_candidate(env, rng);
      positive += x > 0;
      m = std::abs(x);
    }
    const auto rayleigh_cdf = [](double r) { return r < 0 ? 0.0 : 1 - std::exp(-r * r / 2); };
    CHECK(ks_one_sample(mags, rayleigh_cdf).p_value > 0.01);
    CHECK(std::abs(positive - 50000) < 3 * std::sqrt(25000.0));
  }
  SUBCASE("equal weights match the mixture density")
  {
    ChannelEnvelope<double> env;
    env.w_const = 1.0;
    env.w_linear = 1.0;
    env.rate = 2.0;
    Rng rng(8);
    const int bins = 100;
    const double lo = -5, hi = 5, width = (hi - lo) / bins;
    std::vector<double> observed(bins), expected(bins);
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double x = sample_candidate(env, rng);
      if (x >= lo && x < hi) observed[static_cast<int>((x - lo) / width)] += 1;
    }
    // cdf of the mixture: (Phi(x) + G(x)) / 2 with G(x) = 1/2 + sign(x)(1 - e^{-x^2/2})/2
    auto cdf = [](double x) {
      const double g = 0.5 + (x < 0 ? -1 : 1) * 0.5 * (1 - std::exp(-x * x / 2));
      return 0.5 * (normal_cdf(x) + g);
    };
    for (int b = 0; b < bins; ++b) expected[b] = n * (cdf(lo + (b + 1) * width) - cdf(lo + b * width));
    CHECK(chi_square(observed, expected).p_value > 0.01);
  }
  SUBCASE("flip envelopes take no mark")
  {
    const auto env = envelope_rate(ActivationD::relu(), -1.0, 2.0, 3.0);
    Rng rng(1);
    CHECK_THROWS_AS(sample_candidate(env, rng), ContractViolation);
    CHECK_THROWS_AS(sample_candidate(envelope_rate(ActivationD::relu(), 0.0, 0.0, 1.0), rng), ContractViolation);
  }
}

TEST_CASE("acceptance probability")
{
  CHECK(acceptance_prob(ActivationD::relu(), -1.0, 0.5, 1.0, 1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(acceptance_prob(ActivationD::softplus(1.0), 0.3, 0.0, 0.0, 2.0, -1.0) == 1.0);
  CHECK_THROWS_AS(acceptance_prob(ActivationD::relu(), 0.0, 1.5, 1.0, 1.0, 0.0), BoundViolation);

  Rng rng(9);
  for (int k = 0; k < 100000; ++k) {
    const ActivationD act = k % 2 ? ActivationD::relu() : ActivationD::softplus(0.1 + 3 * uniform_open(rng));
    const double rho = k % 5 == 0 ? -1.0 : -1.0 + 1.999 * uniform_open(rng);
    const double tb = 5 * uniform_open(rng);
    const double th = tb * (2 * uniform_open(rng) - 1);
    const double v = 10 * (uniform_open(rng) - 0.5);
    const double xi = standard_normal(rng) * 3;
    const double p = acceptance_prob(act, rho, th, tb, v, xi);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    // unclamped ratio, checked directly
    const double den = mark_envelope(act, rho, tb, v, xi);
    if (den > 0) CHECK(mark_intensity(act, rho, th, v, xi) <= den * (1 + 1e-12));
  }
}

TEST_CASE("apply_jump")
{
  VectorXd v(2);
  v << 2, 5;
  const VectorXd f = apply_jump<double>(v, 0, -1.0, std::nullopt);
  CHECK(f[0] == -2.0);
  CHECK(f[1] == 5.0);

  const double rho = 1 - 1e-4;
  CHECK(apply_jump<double>(v, 1, rho, 0.0)[1] == rho * 5.0);
  VectorXd w(1);
  w << 0.5;
  CHECK(apply_jump<double>(w, 0, 0.0, 1.3)[0] == 1.3);
  CHECK_THROWS_AS(apply_jump<double>(w, 0, -1.0, 0.2), ContractViolation);
  CHECK_THROWS_AS(apply_jump<double>(w, 0, 0.5, std::nullopt), ContractViolation);
  CHECK_THROWS_AS(apply_jump<double>(w, 3, 0.5, 0.1), ContractViolation);
}

TEST_CASE("jump flow with no jump force")
{
  const Preset free = make_preset("free");
  PhaseStateD s(VectorXd::Constant(1, 0.3), VectorXd::Constant(1, -1.7));
  Rng rng(1);
  const Rng before = rng;
  simulate_jump_flow(s, free.potential, JumpParams<double>{ActivationD::relu(), 0.2}, 10.0, rng);
  CHECK(s.v[0] == -1.7);
  CHECK(s.counters == EventCounters{});
  CHECK(rng == before);
}

TEST_CASE("relu flip channel at rest is silent")
{
  const Preset torus = make_preset("torus1d");
  PhaseStateD s(VectorXd::Constant(1, 0.3), VectorXd::Zero(1));
  Rng rng(2);
  for (bool count_first : {true, false}) {
    simulate_jump_flow(s, torus.potential, JumpParams<double>{ActivationD::relu(), -1.0, count_first}, 5.0, rng);
    CHECK(s.counters.proposals == 0);
    CHECK(s.v[0] == 0.0);
  }
}

TEST_CASE("lazy force evaluation and event log")
{
  const Preset torus = make_preset("torus1d");
  Rng init(4);
  for (double rho : {-1.0, 0.0, 0.7}) {
    PhaseStateD s(VectorXd::Constant(1, 0.2), VectorXd::Constant(1, 1.1));
    std::vector<JumpEvent> log;
    Rng rng(100);
    simulate_jump_flow(s, torus.potential, JumpParams<double>{ActivationD::softplus(1.0), rho}, 50.0, rng, &log);
    CHECK(s.counters.u1_evals == s.counters.proposals);
    CHECK(s.counters.proposals == log.size());
    CHECK(s.counters.proposals > 10);
    std::uint64_t accepted = 0;
    for (std::size_t k = 0; k < log.size(); ++k) {
      CHECK(log[k].t >= 0.0);
      CHECK(log[k].t <= 50.0);
      if (k) CHECK(log[k].t >= log[k - 1].t);
      CHECK(log[k].p_accept >= 0.0);
      CHECK(log[k].p_accept <= 1.0);
      CHECK(log[k].xi.has_value() == (rho != -1.0));
      accepted += log[k].accepted;
    }
    CHECK(accepted == s.counters.jumps);

    // the same stream replays the same log
    PhaseStateD again(VectorXd::Constant(1, 0.2), VectorXd::Constant(1, 1.1));
    std::vector<JumpEvent> log2;
    Rng rng2(100);
    simulate_jump_flow(again, torus.potential, JumpParams<double>{ActivationD::softplus(1.0), rho}, 50.0, rng2, &log2);
    CHECK(again.v == s.v);
    REQUIRE(log2.size() == log.size());
    for (std::size_t k = 0; k < log.size(); ++k) {
      CHECK(log2[k].t == log[k].t);
      CHECK(log2[k].accepted == log[k].accepted);
    }
  }
}

TEST_CASE("event log csv")
{
  std::vector<JumpEvent> events{{0.25, 0, std::nullopt, 0.5, true}, {0.5, 1, -1.25, 0.125, false}};
  std::ostringstream out;
  write_event_log_csv(out, events);
  CHECK(out.str() == "t,channel,xi,p_accept,accepted\n0.25,1,,0.5,1\n0.5,2,-1.25,0.125,0\n");
}

TEST_CASE("bound violation surfaces from the jump flow")
{
  const Preset torus = with_scaled_bound(make_preset("torus1d"), 0.5);
  PhaseStateD s(VectorXd::Constant(1, 0.0), VectorXd::Constant(1, 2.0)); // cos(0) = 1: full force
  Rng rng(1);
  CHECK_THROWS_AS(
      simulate_jump_flow(s, torus.potential, JumpParams<double>{ActivationD::softplus(1.0), 0.0}, 100.0, rng),
      BoundViolation);
}

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vjlp/estimators.hpp"
#include "vjlp/integrator.hpp"
#include "vjlp/jump_kernel.hpp"
#include "vjlp/oracles.hpp"
#include "vjlp/presets.hpp"
#include "vjlp/stats.hpp"

using namespace vjlp;

namespace {

VectorXd vec(std::initializer_list<double> xs)
{
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

SplitPotentialD harmonic1d()
{
  SplitPotentialD pot;
  pot.space = Space<double>::euclidean(1);
  pot.u0 = [](const VectorXd& x) { return 0.5 * x.squaredNorm(); };
  pot.grad_u0 = [](const VectorXd& x, VectorXd& out) { out = x; };
  pot.partial_u1 = [](const VectorXd&, Eigen::Index) { return 0.0; };
  pot.channel_bound = VectorXd::Zero(1);
  return pot;
}

std::string csv_of(const TrajectoryRecord<double>& rec, Eigen::Index d)
{
  std::ostringstream out;
  write_trajectory_csv(out, rec, d);
  return out.str();
}

} // namespace

TEST_CASE("kernel sequence")
{
  CHECK(is_palindromic(kBjaoajb));
  CHECK(is_palindromic(kBaoab));
  CHECK(kernel_duration(kBjaoajb, SubKernel::A) == 1.0);
  CHECK(kernel_duration(kBjaoajb, SubKernel::O) == 1.0);
  CHECK(kernel_duration(kBjaoajb, SubKernel::B) == 1.0);
  CHECK(kernel_duration(kBjaoajb, SubKernel::J) == 1.0);
  std::string letters;
  for (const auto& s : kBjaoajb) letters += static_cast<char>(s.kernel);
  CHECK(letters == "BJAOAJB");
}

TEST_CASE("kick")
{
  const Preset g = make_preset("gaussian2d");
  PhaseStateD s(vec({1, 0}), vec({0, 0}));
  step_b(s, g.potential, 0.5);
  CHECK(s.v == vec({-0.5, 0}));
  CHECK(s.x == vec({1, 0}));
  CHECK(s.counters.u0_evals == 1);

  PhaseStateD r(vec({0.3, -1.2}), vec({0.7, 2.1}));
  const VectorXd v0 = r.v;
  step_b(r, g.potential, 0.37);
  step_b(r, g.potential, -0.37);
  CHECK((r.v - v0).cwiseAbs().maxCoeff() <= 1e-15);

  SplitPotentialD flat = harmonic1d();
  flat.grad_u0 = [](const VectorXd& x, VectorXd& out) { out = VectorXd::Zero(x.size()); };
  PhaseStateD z(vec({2}), vec({3}));
  step_b(z, flat, 0.5);
  CHECK(z.v[0] == 3.0);
}

TEST_CASE("drift")
{
  PhaseStateD s(vec({0.9}), vec({1}));
  step_a(s, Space<double>::unit_torus(1), 0.2);
  CHECK(s.x[0] == doctest::Approx(0.1).epsilon(1e-14));

  PhaseStateD e(vec({0}), vec({2}));
  step_a(e, Space<double>::euclidean(1), 0.25);
  CHECK(e.x[0] == 0.5);

  PhaseStateD still(vec({0.4, 3}), vec({0, 0}));
  step_a(still, Space<double>::euclidean(2), 10.0);
  CHECK(still.x == vec({0.4, 3}));
}

TEST_CASE("Ornstein-Uhlenbeck step")
{
  Rng rng(1);
  PhaseStateD s(vec({0.1}), vec({1.3}));
  step_o(s, 1.0, 0.0, rng);
  CHECK(s.v[0] == 1.3);

  std::vector<double> refreshed(100000);
  for (std::size_t k = 0; k < refreshed.size(); ++k) {
    PhaseStateD t(vec({0}), vec({4.0}));
    step_o(t, 1e3, 1.0, rng);
    refreshed[k] = t.v[0];
  }
  CHECK(ks_one_sample(refreshed, normal_cdf).p_value > 0.01);

  const double gamma = 0.7, h = 0.3;
  std::vector<double> sq(1000000);
  for (auto& q : sq) {
    PhaseStateD t = PhaseStateD::zeros(1);
    step_o(t, gamma, h, rng);
    q = t.v[0] * t.v[0];
  }
  const MeanSe m = mean_se(sq);
  CHECK(std::abs(m.mean - (1 - std::exp(-2 * gamma * h))) < 3 * m.se);

  CHECK_THROWS_AS(step_o(s, 0.0, 0.1, rng), ContractViolation);
}

TEST_CASE("BJAOAJB reduces to BAOAB without jump force")
{
  const Preset free = make_preset("free");
  SchemeConfigD cfg;
  cfg.activation = ActivationD::relu();
  cfg.delta = 0.1;
  cfg.gamma = 0.5;
  const StreamFamily streams(99);
  PhaseStateD a(vec({0.25}), vec({0.5})), b = a;
  StepScratch<double> sa(1), sb(1);
  for (std::uint64_t k = 1; k <= 10000; ++k) {
    bjaoajb_step(a, free.potential, cfg, streams, k, sa);
    baoab_step(b, free.potential, BaoabForce::kFull, cfg, streams, k, sb);
    REQUIRE(a.x[0] == b.x[0]);
    REQUIRE(a.v[0] == b.v[0]);
  }
  CHECK(a.counters.proposals == 0);
}

TEST_CASE("zero step size is the identity")
{
  const Preset torus = make_preset("torus1d");
  SchemeConfigD cfg;
  cfg.delta = 0.0;
  PhaseStateD s(vec({0.3}), vec({-0.8}));
  const StreamFamily streams(5);
  for (std::uint64_t k = 1; k <= 100; ++k) bjaoajb_step(s, torus.potential, cfg, streams, k);
  CHECK(s.x[0] == 0.3);
  CHECK(s.v[0] == -0.8);
  CHECK(s.counters.proposals == 0);
}

TEST_CASE("run_trajectory records, strides and determinism")
{
  const Preset torus = make_preset("torus1d");
  SchemeConfigD cfg;
  cfg.delta = 0.1;
  const StreamFamily streams(17);

  PhaseStateD s0(vec({0.2}), vec({0.1}));
  const auto empty = run_trajectory<double>(s0, torus.potential, cfg, 0, {}, streams);
  REQUIRE(empty.rows.size() == 1);
  CHECK(empty.rows[0].step == 0);
  CHECK(empty.rows[0].x == vec({0.2}));

  RunOptions opts;
  opts.stride = 10;
  PhaseStateD s1(vec({0.2}), vec({0.1})), s2 = s1;
  std::vector<JumpEvent> e1, e2;
  opts.events = &e1;
  const auto r1 = run_trajectory<double>(s1, torus.potential, cfg, 1000, {}, streams, opts);
  opts.events = &e2;
  const auto r2 = run_trajectory<double>(s2, torus.potential, cfg, 1000, {}, streams, opts);
  CHECK(r1.rows.size() == 101);
  CHECK(csv_of(r1, 1) == csv_of(r2, 1));
  CHECK(e1.size() == e2.size());
  for (std::size_t k = 1; k < r1.rows.size(); ++k) {
    CHECK(r1.rows[k].t > r1.rows[k - 1].t);
    CHECK(r1.rows[k].counters.proposals >= r1.rows[k - 1].counters.proposals);
    CHECK(r1.rows[k].counters.jumps >= r1.rows[k - 1].counters.jumps);
  }
  std::istringstream lines(csv_of(r1, 1));
  std::string header;
  std::getline(lines, header);
  CHECK(header == "step,t,x1,v1,proposals,jumps,u1_evals,u0_evals");

  // a different replica gives a different path
  PhaseStateD s3(vec({0.2}), vec({0.1}));
  const auto r3 = run_trajectory<double>(s3, torus.potential, cfg, 1000, {}, StreamFamily(17, 1), RunOptions{10});
  CHECK(csv_of(r3, 1) != csv_of(r1, 1));
}

TEST_CASE("observers see every step")
{
  const Preset torus = make_preset("torus1d");
  SchemeConfigD cfg;
  std::uint64_t calls = 0, last = 0;
  const Observer<double> obs = [&](std::uint64_t k, const PhaseStateD&) {
    ++calls;
    last = k;
  };
  PhaseStateD s(vec({0.5}), vec({0}));
  RunOptions opts;
  opts.record = false;
  const auto rec = run_trajectory<double>(s, torus.potential, cfg, 250, std::span(&obs, 1), StreamFamily(1), opts);
  CHECK(rec.rows.empty());
  CHECK(calls == 251);
  CHECK(last == 250);
}

TEST_CASE("blow-up is reported with its step")
{
  SchemeConfigD cfg;
  cfg.delta = 2.5; // beyond the leapfrog stability limit of the harmonic well
  cfg.gamma = 1e-3;
  PhaseStateD s(vec({1}), vec({0}));
  try {
    run_trajectory<double>(s, harmonic1d(), cfg, 100000, {}, StreamFamily(1), RunOptions{1, false});
    FAIL("expected a blow-up");
  } catch (const NumericalBlowup& e) {
    CHECK(e.step() > 1);
    CHECK(std::string(e.what()).find(std::to_string(e.step())) != std::string::npos);
  }

  // the gaussian preset leaves its bound box before it overflows
  const Preset g = make_preset("gaussian2d");
  PhaseStateD q(vec({1, 1}), vec({0, 0}));
  cfg.delta = 2.5;
  CHECK_THROWS(run_trajectory<double>(q, g.potential, cfg, 100000, {}, StreamFamily(1), RunOptions{1, false}));
}

TEST_CASE("proposals follow the integrated envelope on torus1d")
{
  const Preset torus = make_preset("torus1d");
  SchemeConfigD cfg;
  cfg.delta = 0.1;
  const std::uint64_t n = 1000000;
  // per-step (proposals - delta * sum of envelope rates at the step end)
  std::vector<double> excess;
  excess.reserve(n);
  std::uint64_t prev = 0;
  const Observer<double> obs = [&](std::uint64_t step, const PhaseStateD& s) {
    if (step > 0) excess.push_back(static_cast<double>(s.counters.proposals - prev) -
                                   cfg.delta * envelope_rate(cfg.activation, cfg.rho, torus.potential.channel_bound[0], s.v[0]).rate);
    prev = s.counters.proposals;
  };
  PhaseStateD s(vec({0.5}), vec({1.0}));
  run_trajectory<double>(s, torus.potential, cfg, n, std::span(&obs, 1), StreamFamily(23), RunOptions{1, false});
  CHECK(s.counters.u1_evals == s.counters.proposals);
  const auto b = time_average(excess, 0, "excess", cfg.delta);
  CHECK(std::abs(b.estimate) < 3 * b.se);
}

TEST_CASE("equilibrium velocity marginal and a bounded Lyapunov average")
{
  const Preset torus = make_preset("torus1d");
  SchemeConfigD cfg;
  cfg.delta = 0.05;
  const std::uint64_t n = 1000000, burn = 1000;
  std::vector<double> v, v2;
  double lyapunov = 0.0, worst_running = 0.0;
  const Observer<double> obs = [&](std::uint64_t k, const PhaseStateD& s) {
    lyapunov += std::exp(0.1 * s.v.squaredNorm());
    if (k > burn) worst_running = std::max(worst_running, lyapunov / static_cast<double>(k + 1));
    if (k > burn) {
      v.push_back(s.v[0]);
      v2.push_back(s.v[0] * s.v[0]);
    }
  };
  PhaseStateD s(vec({0.0}), vec({3.0}));
  run_trajectory<double>(s, torus.potential, cfg, n, std::span(&obs, 1), StreamFamily(31), RunOptions{1, false});
  const auto m1 = time_average(v, 0, "v1", cfg.delta);
  const auto m2 = time_average(v2, 0, "v1^2", cfg.delta);
  CHECK(std::abs(m1.estimate) < 3 * m1.se);
  CHECK(std::abs(m2.estimate - 1.0) < 3 * m2.se + 0.01);
  // mu(e^{0.1 |v|^2}) = 1/sqrt(0.8)
  CHECK(worst_running < 2.0);
  CHECK(lyapunov / static_cast<double>(n + 1) == doctest::Approx(1 / std::sqrt(0.8)).epsilon(0.02));
}

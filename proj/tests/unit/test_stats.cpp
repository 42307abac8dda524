#include <doctest.h>

#include <cmath>

#include "vjlp/random.hpp"
#include "vjlp/stats.hpp"

using namespace vjlp;

TEST_CASE("Kolmogorov survival function")
{
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.2699996716735).epsilon(1e-9));
  CHECK(kolmogorov_survival(1.3580986) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(kolmogorov_survival(0.2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kolmogorov_survival(5.0) < 1e-20);
}

TEST_CASE("KS tests")
{
  Rng rng(1);
  std::vector<double> a(20000), b(20000), shifted(20000);
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = standard_normal(rng);
    b[k] = standard_normal(rng);
    shifted[k] = standard_normal(rng) + 0.05;
  }
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, shifted).p_value < 0.01);
  CHECK(ks_one_sample(a, normal_cdf).p_value > 0.01);
  CHECK(ks_one_sample(shifted, normal_cdf).p_value < 0.01);

  const std::vector<double> x{0.1, 0.2, 0.3}, y{0.1, 0.2, 0.3};
  CHECK(ks_two_sample(x, y).statistic == 0.0);
  CHECK_THROWS(ks_two_sample({}, y));
}

TEST_CASE("chi-square tests")
{
  const std::vector<double> obs{10, 20, 30, 40}, exp{10, 20, 30, 40};
  const auto same = chi_square(obs, exp);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));

  // (10^2 + 10^2) / 50 = 4 on 3 degrees of freedom
  const std::vector<double> o3{60, 40, 50, 50}, e2{50, 50, 50, 50};
  const auto r = chi_square(o3, e2);
  CHECK(r.statistic == doctest::Approx(4.0));
  CHECK(r.p_value == doctest::Approx(0.2614641).epsilon(1e-6));

  // sparse bins are pooled
  const std::vector<double> o4{1, 0, 2, 48, 49}, e4{1, 1, 1, 48, 49};
  const auto pooled = chi_square(o4, e4);
  CHECK(pooled.statistic == doctest::Approx(0.0));
  const std::vector<double> o5{1, 0, 2, 97}, e5{1, 1, 1, 97};
  CHECK_THROWS(chi_square(o5, e5));

  const std::vector<double> ca{100, 200, 300}, cb{100, 200, 300};
  CHECK(chi_square_two_sample(ca, cb).statistic == 0.0);
}

TEST_CASE("distribution helpers")
{
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(students_t_quantile(0.975, 10) == doctest::Approx(2.228138851986).epsilon(1e-9));
  CHECK(students_t_quantile(0.975, 1) == doctest::Approx(12.7062047362).epsilon(1e-9));

  const std::vector<double> xs{1, 2, 3, 4};
  const MeanSe m = mean_se(xs);
  CHECK(m.mean == 2.5);
  CHECK(m.variance == doctest::Approx(5.0 / 3.0));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("random streams")
{
  const StreamFamily f(5, 0), g(5, 1);
  Rng a = f.substream(10, KernelTag::kJumpFirst), b = f.substream(10, KernelTag::kJumpFirst);
  CHECK(a() == b());
  Rng c = f.substream(10, KernelTag::kJumpSecond), d = g.substream(10, KernelTag::kJumpFirst);
  Rng e = f.substream(11, KernelTag::kJumpFirst);
  const auto first = f.substream(10, KernelTag::kJumpFirst)();
  CHECK(c() != first);
  CHECK(d() != first);
  CHECK(e() != first);

  Rng u(3);
  double lo = 1, hi = 0;
  for (int k = 0; k < 100000; ++k) {
    const double x = uniform_open(u);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);

  double sum = 0;
  for (int k = 0; k < 20000; ++k) sum += static_cast<double>(poisson(u, 3.5));
  CHECK(sum / 20000 == doctest::Approx(3.5).epsilon(0.02));
  CHECK(poisson(u, 0.0) == 0);
}

#include "vjlp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace vjlp {

double kolmogorov_survival(double t)
{
  if (t <= 0.0) return 1.0;
  // the alternating series converges slowly for small t; there Q is 1 to
  // double precision
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double n_eff)
{
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

} // namespace

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf)
{
  if (a.empty()) throw std::invalid_argument("KS test needs a nonempty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

TestResult chi_square(std::span<const double> observed, std::span<const double> expected, double min_expected,
                      int fitted)
{
  if (observed.size() != expected.size()) throw std::invalid_argument("chi-square bin count mismatch");
  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    o += observed[k];
    e += expected[k];
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  // leftover tail joins the last pooled bin
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  const int dof = static_cast<int>(obs.size()) - 1 - fitted;
  if (dof < 1) throw std::invalid_argument("chi-square test needs at least two pooled bins");
  double stat = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) stat += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
  const boost::math::chi_squared dist(dof);
  return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

TestResult chi_square_two_sample(std::span<const double> counts_a, std::span<const double> counts_b,
                                 double min_expected)
{
  if (counts_a.size() != counts_b.size()) throw std::invalid_argument("chi-square bin count mismatch");
  double na = 0.0, nb = 0.0;
  for (double c : counts_a) na += c;
  for (double c : counts_b) nb += c;
  if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("chi-square test needs nonempty histograms");
  // pool bins until both expected counts reach the threshold
  std::vector<double> pa, pb;
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < counts_a.size(); ++k) {
    a += counts_a[k];
    b += counts_b[k];
    const double tot = a + b;
    if (tot * na / (na + nb) >= min_expected && tot * nb / (na + nb) >= min_expected) {
      pa.push_back(a);
      pb.push_back(b);
      a = b = 0.0;
    }
  }
  if (a + b > 0.0) {
    if (pa.empty()) {
      pa.push_back(a);
      pb.push_back(b);
    } else {
      pa.back() += a;
      pb.back() += b;
    }
  }
  const int dof = static_cast<int>(pa.size()) - 1;
  if (dof < 1) throw std::invalid_argument("chi-square test needs at least two pooled bins");
  double stat = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    const double tot = pa[k] + pb[k];
    const double ea = tot * na / (na + nb);
    const double eb = tot * nb / (na + nb);
    stat += (pa[k] - ea) * (pa[k] - ea) / ea + (pb[k] - eb) * (pb[k] - eb) / eb;
  }
  const boost::math::chi_squared dist(dof);
  return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

double normal_cdf(double z)
{
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

double students_t_quantile(double p, double dof)
{
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

MeanSe mean_se(std::span<const double> xs)
{
  MeanSe r;
  if (xs.empty()) return r;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  r.mean = m;
  if (xs.size() > 1) {
    r.variance = ss / static_cast<double>(xs.size() - 1);
    r.se = std::sqrt(r.variance / static_cast<double>(xs.size()));
  }
  return r;
}

} // namespace vjlp

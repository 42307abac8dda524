#ifndef VJLP_STATS_HPP
#define VJLP_STATS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace vjlp {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov survival function Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2).
double kolmogorov_survival(double t);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (Stephens'
/// small-sample correction on the effective size).
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample Kolmogorov-Smirnov test against a continuous cdf.
TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

/// Pearson chi-square goodness of fit. Adjacent bins are pooled until each
/// expected count is at least `min_expected`; `fitted` parameters are taken
/// off the degrees of freedom.
TestResult chi_square(std::span<const double> observed, std::span<const double> expected,
                      double min_expected = 5.0, int fitted = 0);

/// Chi-square test of homogeneity between two count histograms.
TestResult chi_square_two_sample(std::span<const double> counts_a, std::span<const double> counts_b,
                                 double min_expected = 5.0);

double normal_cdf(double z);
double students_t_quantile(double p, double dof);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double variance = 0.0;
};

/// Sample mean, its standard error and the unbiased variance of i.i.d. data.
MeanSe mean_se(std::span<const double> xs);

} // namespace vjlp

#endif // VJLP_STATS_HPP

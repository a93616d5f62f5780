#pragma once

// Sample statistics shared by the ensemble experiments.

#include <cstddef>
#include <functional>
#include <vector>

namespace pilotwave::stats {

double mean(const std::vector<double>& x);
/// Sample standard deviation (n - 1 denominator).
double stddev(const std::vector<double>& x);
double median(std::vector<double> x);
double quantile(std::vector<double> x, double p);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson correlation of the ranks; ties get their average rank.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> ranks(const std::vector<double>& x);

/// One-sample Kolmogorov-Smirnov distance sup|F_n - F|.
double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf);
/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> counts;
  std::size_t samples = 0;  // all samples, including those outside [lo, hi)

  std::size_t bins() const { return counts.size(); }
  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(std::size_t k) const { return lo + (static_cast<double>(k) + 0.5) * width(); }
  double edge(std::size_t k) const { return lo + static_cast<double>(k) * width(); }
  /// Probability density per bin, normalized by the total sample count.
  std::vector<double> density() const;
};

/// Fixed-width histogram over [lo, hi); the last bin is closed on the right.
Histogram histogram(const std::vector<double>& x, double lo, double hi, std::size_t bins);

/// L1 distance between the densities of two histograms with identical bins.
double l1_distance(const Histogram& a, const Histogram& b);

/// Gaussian kernel density estimate evaluated at each point of `at`.
std::vector<double> kde(const std::vector<double>& x, const std::vector<double>& at, double bandwidth);

/// Number of local maxima of the Gaussian KDE on a 400-point grid spanning
/// the data +/- 3 bandwidths whose prominence exceeds 5% of the tallest peak.
int count_peaks(const std::vector<double>& x, double bandwidth);

}  // namespace pilotwave::stats

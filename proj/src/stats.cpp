#include "pilotwave/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pilotwave/errors.hpp"

namespace pilotwave::stats {

namespace {

void require_nonempty(const std::vector<double>& x, const char* what) {
  if (x.empty()) throw InvalidArgument(std::string(what) + " needs at least one sample");
}

}  // namespace

double mean(const std::vector<double>& x) {
  require_nonempty(x, "mean");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) {
  if (x.size() < 2) throw InvalidArgument("stddev needs at least two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double quantile(std::vector<double> x, double p) {
  require_nonempty(x, "quantile");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile p must lie in [0, 1]");
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= x.size()) return x.back();
  const double f = pos - static_cast<double>(k);
  return x[k] + f * (x[k + 1] - x[k]);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson needs two equal-length samples");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  require_nonempty(x, "ks_statistic");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = cdf(x[k]);
    d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require_nonempty(a, "ks_two_sample");
  require_nonempty(b, "ks_two_sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

std::vector<double> Histogram::density() const {
  std::vector<double> d(counts.size(), 0.0);
  if (samples == 0) return d;
  const double norm = 1.0 / (static_cast<double>(samples) * width());
  for (std::size_t k = 0; k < counts.size(); ++k) d[k] = counts[k] * norm;
  return d;
}

Histogram histogram(const std::vector<double>& x, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram needs bins > 0 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0.0);
  h.samples = x.size();
  const double scale = static_cast<double>(bins) / (hi - lo);
  for (double v : x) {
    if (!(v >= lo && v <= hi)) continue;
    auto k = static_cast<std::size_t>((v - lo) * scale);
    if (k >= bins) k = bins - 1;
    h.counts[k] += 1.0;
  }
  return h;
}

double l1_distance(const Histogram& a, const Histogram& b) {
  if (a.bins() != b.bins() || a.lo != b.lo || a.hi != b.hi)
    throw InvalidArgument("l1_distance needs histograms with identical bins");
  const auto da = a.density(), db = b.density();
  double s = 0.0;
  for (std::size_t k = 0; k < da.size(); ++k) s += std::abs(da[k] - db[k]);
  return s * a.width();
}

std::vector<double> kde(const std::vector<double>& x, const std::vector<double>& at, double bandwidth) {
  require_nonempty(x, "kde");
  if (!(bandwidth > 0)) throw InvalidArgument("kde bandwidth must be positive");
  const double norm = 1.0 / (static_cast<double>(x.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(at.size(), 0.0);
  for (std::size_t k = 0; k < at.size(); ++k) {
    double s = 0.0;
    for (double v : x) {
      const double z = (at[k] - v) / bandwidth;
      if (std::abs(z) < 40.0) s += std::exp(-0.5 * z * z);
    }
    out[k] = s * norm;
  }
  return out;
}

int count_peaks(const std::vector<double>& x, double bandwidth) {
  require_nonempty(x, "count_peaks");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double lo = *mn - 3 * bandwidth, hi = *mx + 3 * bandwidth;
  constexpr int n = 400;
  std::vector<double> grid(n);
  for (int k = 0; k < n; ++k) grid[k] = lo + (hi - lo) * k / (n - 1);
  const auto f = kde(x, grid, bandwidth);
  const double top = *std::max_element(f.begin(), f.end());
  int peaks = 0;
  for (int k = 1; k + 1 < n; ++k) {
    if (!(f[k] > f[k - 1] && f[k] >= f[k + 1])) continue;
    // Prominence: descend on each side until a higher point or the edge.
    double left = f[k], right = f[k];
    for (int i = k - 1; i >= 0 && f[i] <= f[k]; --i) left = std::min(left, f[i]);
    for (int i = k + 1; i < n && f[i] <= f[k]; ++i) right = std::min(right, f[i]);
    if (f[k] - std::max(left, right) > 0.05 * top) ++peaks;
  }
  return peaks;
}

}  // namespace pilotwave::stats

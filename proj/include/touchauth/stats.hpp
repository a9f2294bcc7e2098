#pragma once

// Descriptive statistics over small double series.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace touchauth::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Population standard deviation (divides by n).
inline double stddev(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

inline double min(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }
inline double max(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

/// Percentile with linear interpolation between order statistics, q in [0, 100].
/// Position is q/100 * (n - 1) over the sorted series.
inline double percentile_sorted(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q / 100.0 * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::span<const double> v, double q) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return percentile_sorted(s, q);
}

inline double median(std::span<const double> v) { return percentile(v, 50.0); }

inline double iqr(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return percentile_sorted(s, 75.0) - percentile_sorted(s, 25.0);
}

/// Biased sample skewness m3 / m2^1.5. Undefined for fewer than 3 values or zero spread.
inline std::optional<double> skewness(std::span<const double> v) {
  if (v.size() < 3) return std::nullopt;
  const double m = mean(v);
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(v.size());
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) return std::nullopt;
  return m3 / std::pow(m2, 1.5);
}

/// Biased excess kurtosis m4 / m2^2 - 3. Undefined for fewer than 4 values or zero spread.
inline std::optional<double> kurtosis(std::span<const double> v) {
  if (v.size() < 4) return std::nullopt;
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(v.size());
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) return std::nullopt;
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace touchauth::stats

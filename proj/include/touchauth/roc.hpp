#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "touchauth/error.hpp"

namespace touchauth {

struct RocPoint {
  double threshold;
  double far;  // impostor scores >= threshold
  double frr;  // genuine scores < threshold
};

using RocCurve = std::vector<RocPoint>;

/// Thresholds are the distinct observed scores in ascending order plus one sentinel
/// just above the maximum (accept nothing).
inline RocCurve compute_roc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw Error(ErrorKind::EmptyScores, "ROC needs genuine and impostor scores");
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thr;
  thr.reserve(g.size() + im.size() + 1);
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thr));
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
  thr.push_back(std::nextafter(thr.back(), std::numeric_limits<double>::infinity()));

  const double ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  RocCurve curve;
  curve.reserve(thr.size());
  for (double t : thr) {
    const auto below_g = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    const auto below_i = std::lower_bound(im.begin(), im.end(), t) - im.begin();
    curve.push_back({t, (ni - static_cast<double>(below_i)) / ni, static_cast<double>(below_g) / ng});
  }
  return curve;
}

struct EerResult {
  double eer;
  double threshold;
};

/// Exact crossing if one is listed, otherwise linear interpolation between the two
/// adjacent thresholds where FAR - FRR changes sign.
inline EerResult compute_eer(const RocCurve& curve) {
  if (curve.empty()) throw Error(ErrorKind::EmptyScores, "empty ROC curve");
  for (const auto& p : curve)
    if (p.far == p.frr) return {p.far, p.threshold};
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    const double d0 = curve[k].far - curve[k].frr;
    const double d1 = curve[k + 1].far - curve[k + 1].frr;
    if (d0 > 0.0 && d1 < 0.0) {
      const double a = d0 / (d0 - d1);
      return {curve[k].far + a * (curve[k + 1].far - curve[k].far),
              curve[k].threshold + a * (curve[k + 1].threshold - curve[k].threshold)};
    }
  }
  // Not reachable for curves built by compute_roc (first point has FRR = 0, last FAR = 0).
  const auto best = std::min_element(curve.begin(), curve.end(), [](const RocPoint& a, const RocPoint& b) {
    return std::abs(a.far - a.frr) < std::abs(b.far - b.frr);
  });
  return {0.5 * (best->far + best->frr), best->threshold};
}

inline double equal_error_rate(std::span<const double> genuine, std::span<const double> impostor) {
  return compute_eer(compute_roc(genuine, impostor)).eer;
}

}  // namespace touchauth

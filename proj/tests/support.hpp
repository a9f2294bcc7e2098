#pragma once

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "checks.hpp"
#include "touchauth/touchauth.hpp"

#define EXPECT_ERROR_KIND(stmt, k)                                        \
  do {                                                                    \
    try {                                                                 \
      stmt;                                                               \
      ADD_FAILURE() << "expected " << touchauth::to_string(k);            \
    } catch (const touchauth::Error& e) {                                 \
      EXPECT_EQ(e.kind(), k) << e.what();                                 \
    }                                                                     \
  } while (0)

namespace testutil {

using touchauth::Phase;
using touchauth::TouchSample;

inline TouchSample sample(std::int64_t t, double x, double y, double p = 0.5, double a = 0.1,
                          Phase ph = Phase::Move) {
  return TouchSample{t, x, y, p, a, ph};
}

/// Straight swipe of n samples, dt ms apart, with down/up phases set.
inline touchauth::Swipe line_swipe(std::size_t n, std::int64_t t0 = 1000, std::int64_t dt = 16, double dx = 10.0,
                                   double dy = -20.0) {
  touchauth::Swipe s{"u", "s", "dev", {}};
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i);
    auto ph = i == 0 ? Phase::Down : i + 1 == n ? Phase::Up : Phase::Move;
    s.samples.push_back(sample(t0 + static_cast<std::int64_t>(i) * dt, 100 + dx * k + 0.3 * k * k,
                               900 + dy * k, 0.4 + 0.01 * k, 0.1 + 0.002 * k, ph));
  }
  return s;
}

using checks::random_swipe;
using checks::rel_err;

struct Blobs {
  touchauth::Matrix X;
  std::vector<int> y;
};

/// Two 2-D unit-variance Gaussian blobs `sep` apart; label 1 around the origin.
inline Blobs blobs(std::size_t per_class, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Blobs b;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 1 : 0;
    const double off = label ? 0.0 : sep;
    const double row[2] = {off + z(rng), z(rng)};
    b.X.append_row(row);
    b.y.push_back(label);
  }
  return b;
}

/// Rank-statistic AUC: P(genuine > impostor) + 0.5 P(tie).
inline double auc(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  double s = 0.0;
  for (double g : genuine)
    for (double i : impostor) s += g > i ? 1.0 : g == i ? 0.5 : 0.0;
  return s / static_cast<double>(genuine.size() * impostor.size());
}

}  // namespace testutil

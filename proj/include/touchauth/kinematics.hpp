#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "touchauth/data.hpp"

namespace touchauth {

/// Per-point and per-segment series derived from one swipe of n samples.
struct KinematicSeries {
  std::vector<double> seg_length;        // n-1, pixels
  std::vector<double> seg_dt;            // n-1, seconds
  std::vector<double> velocity;          // n-1, px/s
  std::vector<double> acceleration;      // n-2, px/s^2
  std::vector<double> deviation;         // n, |distance| to the start->stop chord
  std::vector<double> phase_angle;       // n-1, atan2(dy, dx) of each displacement
  std::vector<double> pairwise_angle;    // n-2, signed turn between consecutive displacements
  std::vector<double> angular_velocity;  // n-2, turn / midpoint dt
  std::vector<double> pressure_delta;    // n-1
  std::vector<double> area_delta;        // n-1
  std::size_t ldp_index = 0;             // first point of maximum deviation
};

inline constexpr double kMinSegmentSeconds = 1e-3;

/// Forward differences on consecutive samples. Segments with zero dt (not produced
/// by segmentation) are floored at one millisecond.
inline KinematicSeries compute_kinematics(const Swipe& swipe) {
  const auto& p = swipe.samples;
  const std::size_t n = p.size();
  KinematicSeries k;
  if (n < 2) return k;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dx = p[i + 1].x - p[i].x;
    const double dy = p[i + 1].y - p[i].y;
    const double dt = std::max(static_cast<double>(p[i + 1].t - p[i].t) / 1000.0, kMinSegmentSeconds);
    const double len = std::hypot(dx, dy);
    k.seg_length.push_back(len);
    k.seg_dt.push_back(dt);
    k.velocity.push_back(len / dt);
    k.phase_angle.push_back(std::atan2(dy, dx));
    k.pressure_delta.push_back(p[i + 1].pressure - p[i].pressure);
    k.area_delta.push_back(p[i + 1].area - p[i].area);
  }
  for (std::size_t j = 0; j + 2 < n; ++j) {
    const double mid_dt = 0.5 * (k.seg_dt[j] + k.seg_dt[j + 1]);
    k.acceleration.push_back((k.velocity[j + 1] - k.velocity[j]) / mid_dt);
    const double ax = p[j + 1].x - p[j].x, ay = p[j + 1].y - p[j].y;
    const double bx = p[j + 2].x - p[j + 1].x, by = p[j + 2].y - p[j + 1].y;
    const double turn = std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    k.pairwise_angle.push_back(turn);
    k.angular_velocity.push_back(turn / mid_dt);
  }

  const double cx = p.back().x - p.front().x;
  const double cy = p.back().y - p.front().y;
  const double chord = std::hypot(cx, cy);
  for (std::size_t i = 0; i < n; ++i) {
    const double rx = p[i].x - p.front().x;
    const double ry = p[i].y - p.front().y;
    k.deviation.push_back(chord > 0.0 ? std::abs(cx * ry - cy * rx) / chord : std::hypot(rx, ry));
  }
  k.ldp_index = static_cast<std::size_t>(std::max_element(k.deviation.begin(), k.deviation.end()) -
                                         k.deviation.begin());
  return k;
}

}  // namespace touchauth

#pragma once

// Extraction of the 149 catalog features from a single swipe.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "touchauth/catalog.hpp"
#include "touchauth/data.hpp"
#include "touchauth/error.hpp"
#include "touchauth/kinematics.hpp"
#include "touchauth/stats.hpp"

namespace touchauth {

/// Values indexed by feature id - 1. Undefined features hold 0 with defined = false.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  std::array<bool, kFeatureCount> defined{};

  double operator[](int id) const { return values[static_cast<std::size_t>(id - 1)]; }
  bool is_defined(int id) const { return defined[static_cast<std::size_t>(id - 1)]; }
};

/// Context that a single swipe cannot provide on its own.
struct SwipeContext {
  std::optional<std::int64_t> previous_swipe_end;  // same session, ms
};

namespace detail {

class FeatureWriter {
 public:
  explicit FeatureWriter(FeatureVector& out) : out_(out) {}

  void set(int id, std::optional<double> v) {
    const auto i = static_cast<std::size_t>(id - 1);
    if (v && std::isfinite(*v)) {
      out_.values[i] = *v;
      out_.defined[i] = true;
    } else {
      out_.values[i] = 0.0;
      out_.defined[i] = false;
    }
  }

 private:
  FeatureVector& out_;
};

inline std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

inline std::optional<double> median_of(std::span<const double> v) {
  if (v.empty()) return std::nullopt;
  return stats::median(v);
}

/// Least-squares fit v ~ a s^2 + b s + c. Empty when fewer than 3 distinct abscissae.
inline std::optional<std::array<double, 3>> quadratic_fit(std::span<const double> s, std::span<const double> v) {
  std::vector<double> distinct(s.begin(), s.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) return std::nullopt;

  // normal equations over basis (s^2, s, 1)
  double m[3][4] = {};
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double b[3] = {s[i] * s[i], s[i], 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += b[r] * b[c];
      m[r][3] += b[r] * v[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (m[piv][col] == 0.0) return std::nullopt;
    if (piv != col)
      for (int c = 0; c < 4; ++c) std::swap(m[piv][c], m[col][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return std::array<double, 3>{m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

// Direct-line direction quantized into four 90 degree sectors centered on the
// screen axes (y grows downward): 0 right, 1 down, 2 left, 3 up.
inline double direction_sector(double theta) {
  constexpr double q = std::numbers::pi / 4.0;
  if (theta >= -q && theta <= q) return 0.0;
  if (theta > q && theta < 3.0 * q) return 1.0;
  if (theta > -3.0 * q && theta < -q) return 3.0;
  return 2.0;
}

inline double fold_half_turn(double theta) {
  if (theta > std::numbers::pi / 2.0) return theta - std::numbers::pi;
  if (theta <= -std::numbers::pi / 2.0) return theta + std::numbers::pi;
  return theta;
}

}  // namespace detail

/// Computes every catalog feature for one swipe.
inline FeatureVector extract_all_features(const Swipe& swipe, const SwipeContext& ctx = {}) {
  using detail::median_of;
  using detail::ratio;
  FeatureVector fv;
  detail::FeatureWriter w(fv);
  const auto& p = swipe.samples;
  const std::size_t n = p.size();
  if (n < 2) return fv;
  const auto k = compute_kinematics(swipe);
  const auto& first = p.front();
  const auto& last = p.back();

  std::vector<double> xs, ys, pressure, area;
  for (const auto& s : p) {
    xs.push_back(s.x);
    ys.push_back(s.y);
    pressure.push_back(s.pressure);
    area.push_back(s.area);
  }
  const double duration_ms = static_cast<double>(last.t - first.t);
  const double duration_s = duration_ms / 1000.0;
  const double dx = last.x - first.x;
  const double dy = last.y - first.y;
  const double chord = std::hypot(dx, dy);
  const double trajectory = std::accumulate(k.seg_length.begin(), k.seg_length.end(), 0.0);
  const std::size_t mid = n / 2;
  auto point_velocity = [&](std::size_t i) { return k.velocity[std::min(i, n - 2)]; };

  w.set(1, first.x);
  w.set(2, first.y);
  w.set(3, last.x);
  w.set(4, last.y);
  w.set(5, duration_ms);
  w.set(6, chord);
  w.set(7, p[mid].pressure);
  w.set(8, p[mid].area);
  w.set(9, trajectory);
  if (ctx.previous_swipe_end) w.set(10, static_cast<double>(first.t - *ctx.previous_swipe_end));
  else w.set(10, std::nullopt);

  double sum_cos = 0.0, sum_sin = 0.0;
  for (double a : k.phase_angle) {
    sum_cos += std::cos(a);
    sum_sin += std::sin(a);
  }
  const double m = static_cast<double>(k.phase_angle.size());
  w.set(11, std::hypot(sum_cos / m, sum_sin / m));

  const std::size_t first_acc = std::min<std::size_t>(3, k.acceleration.size());
  w.set(12, median_of(std::span<const double>(k.acceleration).first(first_acc)));
  w.set(13, median_of(std::span<const double>(k.velocity).last(std::min<std::size_t>(2, k.velocity.size()))));
  w.set(14, stats::mean(k.velocity));

  const double direct_theta = std::atan2(dy, dx);
  const std::optional<double> undefined;
  w.set(15, chord > 0.0 ? std::optional(detail::direction_sector(direct_theta)) : undefined);
  w.set(16, chord > 0.0 ? std::optional(direct_theta) : undefined);
  w.set(17, (sum_cos != 0.0 || sum_sin != 0.0) ? std::optional(std::atan2(sum_sin, sum_cos)) : undefined);
  w.set(18, ratio(chord, trajectory));

  auto set_percentiles = [&](int id, std::span<const double> series) {
    if (series.empty()) {
      for (int i = 0; i < 3; ++i) w.set(id + i, undefined);
      return;
    }
    w.set(id, stats::percentile(series, 20.0));
    w.set(id + 1, stats::percentile(series, 50.0));
    w.set(id + 2, stats::percentile(series, 80.0));
  };
  set_percentiles(19, k.velocity);
  set_percentiles(22, k.acceleration);
  set_percentiles(25, k.deviation);
  w.set(28, stats::max(k.deviation));

  w.set(29, first.pressure);
  w.set(30, first.area);
  w.set(31, k.phase_angle.front());
  w.set(32, stats::mean(k.phase_angle));
  {
    double turn = 0.0;
    for (double a : k.pairwise_angle) turn += std::abs(a);
    w.set(33, ratio(turn, trajectory));
  }
  w.set(34, k.deviation[mid]);
  w.set(35, stats::mean(pressure));
  w.set(36, stats::mean(area));
  const double last_index = static_cast<double>(n - 1);
  w.set(37, static_cast<double>(std::max_element(area.begin(), area.end()) - area.begin()) / last_index);
  w.set(38, static_cast<double>(std::min_element(pressure.begin(), pressure.end()) - pressure.begin()) / last_index);

  auto acc_or = [&](auto&& f) -> std::optional<double> {
    if (k.acceleration.empty()) return std::nullopt;
    return f(std::span<const double>(k.acceleration));
  };
  w.set(39, acc_or([](auto s) { return stats::mean(s); }));
  w.set(40, stats::stddev(pressure));
  w.set(41, stats::stddev(area));
  w.set(42, stats::stddev(k.velocity));
  w.set(43, acc_or([](auto s) { return stats::stddev(s); }));

  w.set(44, stats::percentile(pressure, 25.0));
  w.set(45, stats::percentile(area, 25.0));
  w.set(46, stats::percentile(k.velocity, 25.0));
  w.set(47, acc_or([](auto s) { return stats::percentile(s, 25.0); }));
  w.set(48, stats::percentile(pressure, 75.0));
  w.set(49, stats::percentile(area, 75.0));
  w.set(50, stats::percentile(k.velocity, 75.0));
  w.set(51, acc_or([](auto s) { return stats::percentile(s, 75.0); }));

  // extreme points: corners of the bounding box
  w.set(52, stats::min(xs));
  w.set(53, stats::min(ys));
  w.set(54, stats::max(xs));
  w.set(55, stats::max(ys));
  w.set(56, detail::fold_half_turn(k.phase_angle.back()));

  w.set(57, k.velocity.front());
  w.set(58, last.area);
  w.set(59, last.pressure);
  w.set(60, k.velocity.back());
  w.set(61, k.phase_angle.back());
  w.set(62, stats::mean(k.seg_length));
  w.set(63, stats::stddev(k.seg_length));

  const std::size_t ldp = k.ldp_index;
  const auto& lp = p[ldp];
  w.set(64, lp.x);
  w.set(65, lp.y);
  w.set(66, lp.area);
  w.set(67, lp.pressure);
  w.set(68, point_velocity(ldp));
  {
    double to_ldp = 0.0, from_ldp = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) (i < ldp ? to_ldp : from_ldp) += k.seg_length[i];
    w.set(69, static_cast<double>(lp.t - first.t));
    w.set(70, to_ldp);
    w.set(71, ldp > 0 ? std::optional(std::atan2(lp.y - first.y, lp.x - first.x)) : undefined);
    w.set(72, static_cast<double>(last.t - lp.t));
    w.set(73, from_ldp);
    w.set(74, ldp + 1 < n ? std::optional(std::atan2(last.y - lp.y, last.x - lp.x)) : undefined);
  }
  w.set(75, ratio(k.deviation[ldp], chord));

  double manhattan = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) manhattan += std::abs(p[i + 1].x - p[i].x) + std::abs(p[i + 1].y - p[i].y);
  w.set(76, manhattan);
  w.set(77, ratio(manhattan, trajectory));

  w.set(78, stats::median(k.seg_length));
  w.set(79, stats::iqr(k.seg_length));
  w.set(80, stats::skewness(k.seg_length));
  w.set(81, stats::kurtosis(k.seg_length));

  w.set(82, stats::mean(k.deviation));
  w.set(83, stats::stddev(k.deviation));
  w.set(84, stats::iqr(k.deviation));
  w.set(85, stats::skewness(k.deviation));
  w.set(86, stats::kurtosis(k.deviation));

  auto set_summary6 = [&](int id, std::span<const double> s) {
    if (s.empty()) {
      for (int i = 0; i < 6; ++i) w.set(id + i, undefined);
      return;
    }
    w.set(id, stats::mean(s));
    w.set(id + 1, stats::median(s));
    w.set(id + 2, stats::stddev(s));
    w.set(id + 3, stats::iqr(s));
    w.set(id + 4, stats::skewness(s));
    w.set(id + 5, stats::kurtosis(s));
  };
  set_summary6(87, k.pairwise_angle);
  set_summary6(93, k.phase_angle);
  w.set(99, ratio(chord, duration_s));

  w.set(100, stats::iqr(k.velocity));
  w.set(101, stats::skewness(k.velocity));
  w.set(102, stats::kurtosis(k.velocity));
  set_summary6(103, k.angular_velocity);
  w.set(109, acc_or([](auto s) { return stats::iqr(s); }));
  w.set(110, stats::skewness(k.acceleration));
  w.set(111, stats::kurtosis(k.acceleration));
  w.set(112, stats::iqr(pressure));
  w.set(113, stats::skewness(pressure));
  w.set(114, stats::kurtosis(pressure));

  w.set(115, stats::min(pressure));
  w.set(116, stats::max(pressure));
  w.set(117, stats::min(area));
  w.set(118, stats::max(area));
  w.set(119, stats::min(k.velocity));
  w.set(120, stats::max(k.velocity));
  w.set(121, stats::min(k.pressure_delta));
  w.set(122, stats::max(k.pressure_delta));
  w.set(123, stats::mean(k.pressure_delta));
  w.set(124, stats::median(k.pressure_delta));
  w.set(125, stats::min(k.area_delta));
  w.set(126, stats::max(k.area_delta));
  w.set(127, stats::mean(k.area_delta));
  w.set(128, stats::median(k.area_delta));

  // position at the start of the fastest / slowest segment
  const auto vmax = static_cast<std::size_t>(std::max_element(k.velocity.begin(), k.velocity.end()) - k.velocity.begin());
  const auto vmin = static_cast<std::size_t>(std::min_element(k.velocity.begin(), k.velocity.end()) - k.velocity.begin());
  w.set(129, p[vmax].x);
  w.set(130, p[vmax].y);
  w.set(131, p[vmin].x);
  w.set(132, p[vmin].y);

  {
    std::vector<double> arc(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
      arc[i] = trajectory > 0.0 ? arc[i - 1] + k.seg_length[i - 1] : static_cast<double>(i);
    const double total = trajectory > 0.0 ? trajectory : last_index;
    for (auto& a : arc) a /= total;
    const auto fit = detail::quadratic_fit(arc, pressure);
    for (int i = 0; i < 3; ++i) w.set(133 + i, fit ? std::optional((*fit)[static_cast<std::size_t>(i)]) : undefined);
  }

  std::vector<double> dt_ms;
  for (double dt : k.seg_dt) dt_ms.push_back(dt * 1000.0);
  w.set(136, stats::min(dt_ms));
  w.set(137, stats::max(dt_ms));
  w.set(138, stats::mean(dt_ms));

  auto abs_dev = [](const std::vector<double>& v) {
    const double mu = stats::mean(v);
    std::vector<double> d;
    for (double x : v) d.push_back(std::abs(x - mu));
    return d;
  };
  const auto dev_x = abs_dev(xs);
  const auto dev_y = abs_dev(ys);
  w.set(139, stats::max(dev_x));
  w.set(140, stats::max(dev_y));
  w.set(141, stats::percentile(dev_x, 20.0));
  w.set(142, stats::percentile(dev_y, 20.0));
  w.set(143, stats::median(dev_x));
  w.set(144, stats::median(dev_y));
  w.set(145, stats::percentile(dev_x, 80.0));
  w.set(146, stats::percentile(dev_y, 80.0));

  w.set(147, chord > 0.0 ? std::optional(dx / chord) : undefined);
  w.set(148, chord > 0.0 ? std::optional(dy / chord) : undefined);
  w.set(149, chord > 0.0 ? std::optional(std::abs(dx) >= std::abs(dy) ? 1.0 : 0.0) : undefined);
  return fv;
}

/// Computes the requested features; every other slot is 0 with defined = false.
inline FeatureVector extract_features(const Swipe& swipe, std::span<const int> feature_ids,
                                      const SwipeContext& ctx = {}) {
  std::array<bool, kFeatureCount> wanted{};
  for (int id : feature_ids) {
    if (id < 1 || id > kFeatureCount) throw Error(ErrorKind::UnknownFeatureId, std::to_string(id));
    wanted[static_cast<std::size_t>(id - 1)] = true;
  }
  auto fv = extract_all_features(swipe, ctx);
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    if (!wanted[i]) {
      fv.values[i] = 0.0;
      fv.defined[i] = false;
    }
  }
  return fv;
}

// ---------------------------------------------------------------------------
// Dataset-level feature table

/// Full feature vectors for every swipe of a dataset, in dataset order.
struct FeatureTable {
  std::vector<std::string> user_ids;                             // dataset order
  std::vector<std::vector<std::vector<FeatureVector>>> vectors;  // [user][session][swipe]

  const FeatureVector& at(const SwipeRef& r) const { return vectors[r.user][r.session][r.index]; }
};

inline FeatureTable extract_dataset(const Dataset& ds) {
  FeatureTable table;
  for (const auto& [user, sessions] : ds.users) {
    table.user_ids.push_back(user);
    auto& per_user = table.vectors.emplace_back();
    for (const auto& session : sessions) {
      auto& per_session = per_user.emplace_back();
      std::optional<std::int64_t> prev;
      for (const auto& swipe : session.swipes) {
        per_session.push_back(extract_all_features(swipe, SwipeContext{prev}));
        prev = swipe.end_time();
      }
    }
  }
  return table;
}

/// Catalog export: every feature with its family and study tags, plus the
/// resolved per-study subsets.
inline nlohmann::json catalog_to_json() {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : feature_catalog()) {
    std::vector<std::string> tags(f.study_tags.begin(), f.study_tags.end());
    features.push_back({{"id", f.id}, {"name", f.name}, {"family", std::string(to_string(f.family))}, {"study_tags", tags}});
  }
  nlohmann::json studies = nlohmann::json::object();
  for (std::size_t i = 0; i < kReproducibleStudies; ++i)
    studies[std::string(kStudies[i].id)] = study_feature_set(kStudies[i].id);
  return {{"features", features}, {"studies", studies}};
}

/// Feature-matrix export as CSV: user_id, session_id, swipe_index, f001..f149, m001..m149.
inline void write_feature_csv(const Dataset& ds, const FeatureTable& table, std::ostream& out) {
  char buf[8];
  out << "user_id,session_id,swipe_index";
  for (int i = 1; i <= kFeatureCount; ++i) {
    std::snprintf(buf, sizeof buf, "f%03d", i);
    out << ',' << buf;
  }
  for (int i = 1; i <= kFeatureCount; ++i) {
    std::snprintf(buf, sizeof buf, "m%03d", i);
    out << ',' << buf;
  }
  out << '\n';
  std::size_t u = 0;
  for (const auto& [user, sessions] : ds.users) {
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      for (std::size_t i = 0; i < sessions[s].swipes.size(); ++i) {
        const auto& fv = table.vectors[u][s][i];
        out << user << ',' << sessions[s].session_id << ',' << i;
        for (double v : fv.values) out << ',' << format_number(v);
        for (bool d : fv.defined) out << ',' << (d ? 1 : 0);
        out << '\n';
      }
    }
    ++u;
  }
}

/// Feature-matrix export as JSON lines.
inline void write_feature_jsonl(const Dataset& ds, const FeatureTable& table, std::ostream& out) {
  std::size_t u = 0;
  for (const auto& [user, sessions] : ds.users) {
    for (std::size_t s = 0; s < sessions.size(); ++s) {
      for (std::size_t i = 0; i < sessions[s].swipes.size(); ++i) {
        const auto& fv = table.vectors[u][s][i];
        nlohmann::json j;
        j["user_id"] = user;
        j["session_id"] = sessions[s].session_id;
        j["swipe_index"] = i;
        j["values"] = fv.values;
        j["mask"] = fv.defined;
        out << j.dump() << '\n';
      }
    }
    ++u;
  }
}

inline nlohmann::json catalog_json() {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : feature_catalog()) {
    nlohmann::json tags = nlohmann::json::array();
    for (auto t : f.study_tags) tags.push_back(std::string(t));
    arr.push_back({{"id", f.id}, {"name", f.name}, {"family", std::string(to_string(f.family))}, {"study_tags", tags}});
  }
  return arr;
}

}  // namespace touchauth

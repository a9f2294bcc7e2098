#pragma once

// Synthetic swipe datasets with a tunable amount of per-user identity signal.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include <json.hpp>

#include "touchauth/data.hpp"
#include "touchauth/error.hpp"

namespace touchauth {

struct SyntheticSpec {
  int users = 10;
  int sessions_per_user = 4;
  int swipes_per_session = 20;
  double separability = 8.0;  // between-user spread in units of within-user std
  std::uint64_t seed = 0;

  void validate() const {
    if (users < 2) throw Error(ErrorKind::Config, "synthetic users must be >= 2");
    if (sessions_per_user < 2) throw Error(ErrorKind::Config, "synthetic sessions_per_user must be >= 2");
    if (swipes_per_session < 1) throw Error(ErrorKind::Config, "synthetic swipes_per_session must be >= 1");
    if (!(separability >= 0.0)) throw Error(ErrorKind::Config, "separability must be >= 0");
  }

  static SyntheticSpec from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    try {
      s.users = j.value("users", s.users);
      s.sessions_per_user = j.value("sessions_per_user", s.sessions_per_user);
      s.swipes_per_session = j.value("swipes_per_session", s.swipes_per_session);
      s.separability = j.value("separability", s.separability);
      s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
  }

  nlohmann::json to_json() const {
    return {{"users", users},
            {"sessions_per_user", sessions_per_user},
            {"swipes_per_session", swipes_per_session},
            {"separability", separability},
            {"seed", seed}};
  }
};

namespace detail {

// Population mean and within-user std of each latent swipe parameter.
struct LatentParam {
  double mean;
  double within;
};
inline constexpr LatentParam kStartX{540.0, 30.0};
inline constexpr LatentParam kStartY{1300.0, 40.0};
inline constexpr LatentParam kAngle{-std::numbers::pi / 2, 0.08};
inline constexpr LatentParam kLength{600.0, 35.0};
inline constexpr LatentParam kDuration{220.0, 20.0};
inline constexpr LatentParam kPressure{0.5, 0.03};
inline constexpr LatentParam kArea{0.12, 0.008};
inline constexpr LatentParam kCurvature{0.05, 0.02};

struct Latent {
  double start_x, start_y, angle, length, duration, pressure, area, curvature;
};

}  // namespace detail

/// Each user draws latent parameters around the population mean with spread
/// separability * within-user std; each swipe then jitters them by the within-user
/// std. Samples arrive every ~16 ms with timing jitter.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  using namespace detail;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  auto draw = [&](const LatentParam& p, double spread) { return p.mean + spread * p.within * z(rng); };
  auto jitter = [&](double centre, const LatentParam& p) { return centre + p.within * z(rng); };

  Dataset ds;
  ds.name = "synthetic";
  const int width = spec.users < 100 ? 2 : spec.users < 1000 ? 3 : 6;
  for (int u = 0; u < spec.users; ++u) {
    char name[16];
    std::snprintf(name, sizeof name, "u%0*d", width, u + 1);
    const double s = spec.separability;
    const Latent user{draw(kStartX, s), draw(kStartY, s),   draw(kAngle, s), draw(kLength, s),
                      draw(kDuration, s), draw(kPressure, s), draw(kArea, s), draw(kCurvature, s)};
    auto& sessions = ds.users[name];
    for (int k = 0; k < spec.sessions_per_user; ++k) {
      Session session;
      session.user_id = name;
      session.session_id = "s" + std::to_string(k + 1);
      std::int64_t t = 1'000'000'000LL + static_cast<std::int64_t>(k) * 100'000'000LL;
      for (int w = 0; w < spec.swipes_per_session; ++w) {
        const double sx = jitter(user.start_x, kStartX), sy = jitter(user.start_y, kStartY);
        const double angle = jitter(user.angle, kAngle);
        const double length = std::max(40.0, jitter(user.length, kLength));
        const double duration = std::max(60.0, jitter(user.duration, kDuration));
        const double pressure = std::clamp(jitter(user.pressure, kPressure), 0.05, 1.0);
        const double area = std::clamp(jitter(user.area, kArea), 0.01, 1.0);
        const double curvature = jitter(user.curvature, kCurvature);

        Swipe swipe;
        swipe.user_id = name;
        swipe.session_id = session.session_id;
        swipe.device_model = "synthetic";
        const int n = std::max(static_cast<int>(kMinSwipeSamples) + 1, static_cast<int>(duration / 16.0) + 1);
        std::uniform_int_distribution<int> dt_jitter(-3, 3);
        std::int64_t ts = t;
        for (int i = 0; i < n; ++i) {
          const double a = static_cast<double>(i) / (n - 1);
          const double prog = a * a * (3.0 - 2.0 * a);
          const double along = length * prog;
          const double across = curvature * length * std::sin(std::numbers::pi * prog);
          TouchSample p;
          p.t = ts;
          p.x = sx + along * std::cos(angle) - across * std::sin(angle);
          p.y = sy + along * std::sin(angle) + across * std::cos(angle);
          p.pressure = pressure * (0.8 + 0.4 * std::sin(std::numbers::pi * a));
          p.area = area * (0.9 + 0.2 * std::sin(std::numbers::pi * a));
          p.phase = i == 0 ? Phase::Down : i + 1 == n ? Phase::Up : Phase::Move;
          swipe.samples.push_back(p);
          ts += 16 + dt_jitter(rng);
        }
        session.swipes.push_back(std::move(swipe));
        t = ts + 800 + static_cast<std::int64_t>(std::abs(z(rng)) * 400.0);
      }
      sessions.push_back(std::move(session));
    }
  }
  return ds;
}

}  // namespace touchauth

#pragma once

// Canonical swipe data model.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace touchauth {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

enum class Phase : std::uint8_t { Down, Move, Up };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Down: return "down";
    case Phase::Move: return "move";
    case Phase::Up: return "up";
  }
  return "move";
}

/// One touch sample. A channel that the source did not record is NaN.
struct TouchSample {
  std::int64_t t = 0;  // milliseconds
  double x = 0.0;
  double y = 0.0;
  double pressure = 0.0;
  double area = 0.0;
  Phase phase = Phase::Move;

  friend bool operator==(const TouchSample&, const TouchSample&) = default;
};

struct Swipe {
  std::string user_id;
  std::string session_id;
  std::string device_model;
  std::vector<TouchSample> samples;

  std::int64_t start_time() const { return samples.front().t; }
  std::int64_t end_time() const { return samples.back().t; }

  friend bool operator==(const Swipe&, const Swipe&) = default;
};

struct Session {
  std::string session_id;
  std::string user_id;
  std::vector<Swipe> swipes;  // chronological

  friend bool operator==(const Session&, const Session&) = default;
};

struct Dataset {
  std::string name;
  std::map<std::string, std::vector<Session>> users;  // sessions chronological per user

  std::size_t swipe_count() const {
    std::size_t n = 0;
    for (const auto& [_, sessions] : users)
      for (const auto& s : sessions) n += s.swipes.size();
    return n;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr std::size_t kMinSwipeSamples = 4;
inline constexpr std::int64_t kMinSwipeDurationMs = 30;

/// Checks the Swipe invariants: phases down/move.../up, non-decreasing t,
/// at least kMinSwipeSamples samples, non-negative channels.
inline bool is_valid_swipe(const Swipe& s) {
  const auto& v = s.samples;
  if (v.size() < kMinSwipeSamples) return false;
  if (v.front().phase != Phase::Down || v.back().phase != Phase::Up) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i].t < v[i - 1].t) return false;
    if (i > 0 && i + 1 < v.size() && v[i].phase != Phase::Move) return false;
    if (v[i].pressure < 0.0 || v[i].area < 0.0) return false;
    if (!std::isfinite(v[i].x) || !std::isfinite(v[i].y)) return false;
  }
  return true;
}

/// Identity of a swipe inside a Dataset, used for leakage checks.
struct SwipeRef {
  std::size_t user = 0;
  std::size_t session = 0;
  std::size_t index = 0;

  friend auto operator<=>(const SwipeRef&, const SwipeRef&) = default;
};

}  // namespace touchauth

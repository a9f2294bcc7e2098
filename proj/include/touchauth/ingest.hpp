#pragma once

// Canonical event format parsing, stroke segmentation, eligibility filtering
// and config-driven adapters for source-specific layouts.
//
// Canonical record fields:
//   dataset, user_id, session_id, device_model, t_ms, phase, x, y, pressure, area
// as CSV (header mandatory) or JSON lines. An optional pointer_id field marks
// multi-finger traces; only pointer 0 is kept.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "touchauth/data.hpp"
#include "touchauth/error.hpp"

namespace touchauth {

struct SegmentStats {
  std::size_t samples_in = 0;
  std::size_t swipes = 0;
  std::size_t swipe_samples = 0;
  std::size_t taps = 0;  // candidates below the sample/duration floor
  std::size_t tap_samples = 0;
  std::size_t unterminated = 0;  // down with no up before session end (or before the next down)
  std::size_t unterminated_samples = 0;
  std::size_t stray_samples = 0;      // move/up outside a stroke
  std::size_t duplicate_samples = 0;  // collapsed by the duplicate-timestamp rule

  std::size_t discarded_samples() const {
    return tap_samples + unterminated_samples + stray_samples + duplicate_samples;
  }

  SegmentStats& operator+=(const SegmentStats& o) {
    samples_in += o.samples_in;
    swipes += o.swipes;
    swipe_samples += o.swipe_samples;
    taps += o.taps;
    tap_samples += o.tap_samples;
    unterminated += o.unterminated;
    unterminated_samples += o.unterminated_samples;
    stray_samples += o.stray_samples;
    duplicate_samples += o.duplicate_samples;
    return *this;
  }
};

struct ParseReport {
  std::size_t lines = 0;  // non-empty data lines
  std::size_t records = 0;
  std::size_t malformed_count = 0;
  std::size_t dropped_pointer_events = 0;
  SegmentStats segmentation;
};

/// Raw events of one session, before segmentation.
struct SessionEvents {
  std::string user_id;
  std::string session_id;
  std::string device_model;
  std::vector<TouchSample> events;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<Phase> parse_phase(std::string_view s) {
  s = trim(s);
  if (s == "down") return Phase::Down;
  if (s == "move") return Phase::Move;
  if (s == "up") return Phase::Up;
  return std::nullopt;
}

struct Record {
  std::string dataset, user_id, session_id, device_model;
  TouchSample sample;
  long pointer_id = 0;
};

// Optional channels may be empty/null, which maps to NaN (channel absent).
inline std::optional<double> optional_channel(std::string_view s, bool& ok) {
  s = trim(s);
  if (s.empty() || s == "null" || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  auto v = parse_double(s);
  if (!v || !std::isfinite(*v) || *v < 0.0) {
    ok = false;
    return std::nullopt;
  }
  return v;
}

inline bool finish_record(Record& r, std::string_view t, std::string_view phase, std::string_view x,
                          std::string_view y, std::string_view p, std::string_view a) {
  const auto tv = parse_double(t);
  const auto ph = parse_phase(phase);
  const auto xv = parse_double(x);
  const auto yv = parse_double(y);
  if (!tv || !ph || !xv || !yv) return false;
  if (!std::isfinite(*tv) || *tv < 0.0 || *tv != std::floor(*tv)) return false;
  if (!std::isfinite(*xv) || !std::isfinite(*yv)) return false;
  if (r.user_id.empty() || r.session_id.empty()) return false;
  bool ok = true;
  const auto pv = optional_channel(p, ok);
  const auto av = optional_channel(a, ok);
  if (!ok) return false;
  r.sample = TouchSample{static_cast<std::int64_t>(*tv), *xv, *yv, *pv, *av, *ph};
  return true;
}

inline const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> cols{"dataset", "user_id", "session_id", "device_model", "t_ms",
                                             "phase",   "x",       "y",          "pressure",     "area"};
  return cols;
}

inline std::string json_field_string(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  return it->dump();
}

inline std::string json_field_raw(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

inline std::optional<Record> parse_json_line(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  Record r;
  r.dataset = json_field_string(j, "dataset");
  r.user_id = json_field_string(j, "user_id");
  r.session_id = json_field_string(j, "session_id");
  r.device_model = json_field_string(j, "device_model");
  if (auto it = j.find("pointer_id"); it != j.end() && it->is_number_integer()) r.pointer_id = it->get<long>();
  if (!finish_record(r, json_field_raw(j, "t_ms"), json_field_raw(j, "phase"), json_field_raw(j, "x"),
                     json_field_raw(j, "y"), json_field_raw(j, "pressure"), json_field_raw(j, "area")))
    return std::nullopt;
  return r;
}

}  // namespace detail

/// Segments one session's events into swipes. Each down..up run is a candidate;
/// duplicate timestamps inside a candidate collapse to the last sample at that t
/// (phases are then re-normalized to down/move.../up), and candidates shorter than
/// kMinSwipeSamples samples or kMinSwipeDurationMs are discarded as taps.
inline std::vector<Swipe> segment_strokes(const SessionEvents& session, SegmentStats* stats = nullptr) {
  SegmentStats local;
  SegmentStats& st = stats ? *stats : local;
  std::vector<TouchSample> events = session.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const TouchSample& a, const TouchSample& b) { return a.t < b.t; });
  st.samples_in += events.size();

  std::vector<Swipe> out;
  std::vector<TouchSample> current;
  bool open = false;

  auto close = [&]() {
    std::vector<TouchSample> dedup;
    dedup.reserve(current.size());
    for (const auto& s : current) {
      if (!dedup.empty() && dedup.back().t == s.t) {
        dedup.back() = s;
        ++st.duplicate_samples;
      } else {
        dedup.push_back(s);
      }
    }
    const bool long_enough = dedup.size() >= kMinSwipeSamples &&
                             dedup.back().t - dedup.front().t >= kMinSwipeDurationMs;
    if (!long_enough) {
      ++st.taps;
      st.tap_samples += dedup.size();
    } else {
      for (auto& s : dedup) s.phase = Phase::Move;
      dedup.front().phase = Phase::Down;
      dedup.back().phase = Phase::Up;
      ++st.swipes;
      st.swipe_samples += dedup.size();
      out.push_back(Swipe{session.user_id, session.session_id, session.device_model, std::move(dedup)});
    }
    current.clear();
    open = false;
  };

  for (const auto& e : events) {
    switch (e.phase) {
      case Phase::Down:
        if (open) {
          ++st.unterminated;
          st.unterminated_samples += current.size();
          current.clear();
        }
        open = true;
        current.push_back(e);
        break;
      case Phase::Move:
        if (open) current.push_back(e);
        else ++st.stray_samples;
        break;
      case Phase::Up:
        if (open) {
          current.push_back(e);
          close();
        } else {
          ++st.stray_samples;
        }
        break;
    }
  }
  if (open) {
    ++st.unterminated;
    st.unterminated_samples += current.size();
  }
  return out;
}

/// Builds a Dataset from grouped session events. Sessions are ordered by first
/// swipe time, ties broken by session id; sessions without swipes are dropped.
inline Dataset build_dataset(std::string name, const std::vector<SessionEvents>& sessions,
                             SegmentStats* stats = nullptr) {
  Dataset ds;
  ds.name = std::move(name);
  for (const auto& se : sessions) {
    auto swipes = segment_strokes(se, stats);
    if (swipes.empty()) continue;
    ds.users[se.user_id].push_back(Session{se.session_id, se.user_id, std::move(swipes)});
  }
  for (auto& [_, list] : ds.users) {
    std::sort(list.begin(), list.end(), [](const Session& a, const Session& b) {
      const auto ta = a.swipes.front().start_time();
      const auto tb = b.swipes.front().start_time();
      if (ta != tb) return ta < tb;
      return a.session_id < b.session_id;
    });
  }
  return ds;
}

inline constexpr double kMaxMalformedRate = 0.01;

/// Parses a canonical event stream (CSV with header, or JSON lines).
/// Malformed lines are counted; more than 1% of data lines malformed is fatal.
inline Dataset parse_canonical(std::istream& in, ParseReport* report = nullptr) {
  ParseReport local;
  ParseReport& rep = report ? *report : local;

  std::string line;
  std::optional<bool> json_mode;
  std::vector<int> column_index;  // canonical column -> csv position
  int pointer_col = -1;
  std::size_t csv_width = 0;

  std::map<std::pair<std::string, std::string>, SessionEvents> sessions;
  std::string dataset_name;

  while (std::getline(in, line)) {
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    if (!json_mode) {
      json_mode = view.front() == '{';
      if (!*json_mode) {
        const auto header = detail::split(view, ',');
        csv_width = header.size();
        for (const auto& name : detail::canonical_columns()) {
          const auto it = std::find(header.begin(), header.end(), name);
          if (it == header.end()) throw Error(ErrorKind::UnparseableHeader, "missing column '" + name + "'");
          column_index.push_back(static_cast<int>(it - header.begin()));
        }
        if (const auto it = std::find(header.begin(), header.end(), "pointer_id"); it != header.end())
          pointer_col = static_cast<int>(it - header.begin());
        continue;
      }
    }
    ++rep.lines;

    std::optional<detail::Record> rec;
    if (*json_mode) {
      rec = detail::parse_json_line(view);
    } else {
      const auto f = detail::split(view, ',');
      if (f.size() == csv_width) {
        detail::Record r;
        r.dataset = std::string(f[column_index[0]]);
        r.user_id = std::string(f[column_index[1]]);
        r.session_id = std::string(f[column_index[2]]);
        r.device_model = std::string(f[column_index[3]]);
        bool ok = true;
        if (pointer_col >= 0) {
          const auto pid = detail::parse_double(f[pointer_col]);
          if (pid) r.pointer_id = static_cast<long>(*pid);
          else ok = false;
        }
        if (ok && detail::finish_record(r, f[column_index[4]], f[column_index[5]], f[column_index[6]],
                                        f[column_index[7]], f[column_index[8]], f[column_index[9]]))
          rec = std::move(r);
      }
    }
    if (!rec) {
      ++rep.malformed_count;
      continue;
    }
    ++rep.records;
    if (rec->pointer_id != 0) {
      ++rep.dropped_pointer_events;
      continue;
    }
    if (dataset_name.empty()) dataset_name = rec->dataset;
    auto& se = sessions[{rec->user_id, rec->session_id}];
    if (se.events.empty()) {
      se.user_id = rec->user_id;
      se.session_id = rec->session_id;
      se.device_model = rec->device_model;
    }
    se.events.push_back(rec->sample);
  }

  if (!json_mode) throw Error(ErrorKind::EmptyDataset, "empty stream");
  if (rep.lines > 0 &&
      static_cast<double>(rep.malformed_count) > kMaxMalformedRate * static_cast<double>(rep.lines))
    throw Error(ErrorKind::MalformedRateExceeded, std::to_string(rep.malformed_count) + " of " +
                                                      std::to_string(rep.lines) + " lines malformed");

  std::vector<SessionEvents> grouped;
  grouped.reserve(sessions.size());
  for (auto& [_, se] : sessions) grouped.push_back(std::move(se));
  auto ds = build_dataset(dataset_name, grouped, &rep.segmentation);
  if (ds.users.empty()) throw Error(ErrorKind::EmptyDataset, "no swipes after segmentation");
  return ds;
}

inline Dataset parse_canonical(const std::string& text, ParseReport* report = nullptr) {
  std::istringstream in(text);
  return parse_canonical(in, report);
}

namespace detail {
inline std::string format_channel(double v) {
  if (std::isnan(v)) return {};
  return format_number(v);
}
}  // namespace detail

/// Writes a Dataset back as canonical CSV (one row per sample, chronological).
inline void write_canonical_csv(const Dataset& ds, std::ostream& out) {
  out << "dataset,user_id,session_id,device_model,t_ms,phase,x,y,pressure,area\n";
  for (const auto& [user, sessions] : ds.users)
    for (const auto& session : sessions)
      for (const auto& swipe : session.swipes)
        for (const auto& s : swipe.samples)
          out << ds.name << ',' << user << ',' << session.session_id << ',' << swipe.device_model << ','
              << s.t << ',' << to_string(s.phase) << ',' << detail::format_channel(s.x) << ','
              << detail::format_channel(s.y) << ',' << detail::format_channel(s.pressure) << ','
              << detail::format_channel(s.area) << '\n';
}

/// Writes a Dataset as canonical JSON lines (one object per sample).
inline void write_canonical_jsonl(const Dataset& ds, std::ostream& out) {
  auto channel = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  for (const auto& [user, sessions] : ds.users)
    for (const auto& session : sessions)
      for (const auto& swipe : session.swipes)
        for (const auto& s : swipe.samples)
          out << nlohmann::json{{"dataset", ds.name},          {"user_id", user},
                                {"session_id", session.session_id}, {"device_model", swipe.device_model},
                                {"t_ms", s.t},                  {"phase", std::string(to_string(s.phase))},
                                {"x", channel(s.x)},            {"y", channel(s.y)},
                                {"pressure", channel(s.pressure)}, {"area", channel(s.area)}}
                     .dump()
              << '\n';
}

// ---------------------------------------------------------------------------
// Eligibility

enum class Channel { X, Y, Pressure, Area };

struct EligibilityCriteria {
  int min_sessions = 2;
  bool require_same_device = true;
  std::set<Channel> required_channels{Channel::X, Channel::Y, Channel::Pressure, Channel::Area};
};

struct EligibilityReport {
  std::size_t users_in = 0;
  std::size_t too_few_sessions = 0;
  std::size_t missing_channels = 0;
  std::size_t mixed_devices = 0;
  std::size_t other_device_group = 0;
  std::string device_model;  // selected group when require_same_device
};

namespace detail {
inline bool has_channels(const Session& s, const std::set<Channel>& req) {
  for (const auto& swipe : s.swipes)
    for (const auto& p : swipe.samples)
      for (Channel c : req) {
        const double v = c == Channel::X ? p.x : c == Channel::Y ? p.y : c == Channel::Pressure ? p.pressure : p.area;
        if (std::isnan(v)) return false;
      }
  return true;
}
}  // namespace detail

/// Keeps users with at least min_sessions sessions whose every sample carries the
/// required channels; with require_same_device, only the largest single-device
/// group survives (ties go to the lexicographically smallest model name).
inline Dataset filter_eligible(const Dataset& ds, const EligibilityCriteria& crit,
                               EligibilityReport* report = nullptr) {
  if (crit.min_sessions < 1) throw Error(ErrorKind::Config, "min_sessions must be >= 1");
  EligibilityReport local;
  EligibilityReport& rep = report ? *report : local;
  rep.users_in = ds.users.size();

  std::map<std::string, std::vector<std::string>> by_device;
  for (const auto& [user, sessions] : ds.users) {
    if (static_cast<int>(sessions.size()) < crit.min_sessions) {
      ++rep.too_few_sessions;
      continue;
    }
    if (!std::all_of(sessions.begin(), sessions.end(),
                     [&](const Session& s) { return detail::has_channels(s, crit.required_channels); })) {
      ++rep.missing_channels;
      continue;
    }
    std::set<std::string> models;
    for (const auto& s : sessions)
      for (const auto& sw : s.swipes) models.insert(sw.device_model);
    if (crit.require_same_device && models.size() != 1) {
      ++rep.mixed_devices;
      continue;
    }
    by_device[crit.require_same_device ? *models.begin() : std::string()].push_back(user);
  }

  const std::vector<std::string>* chosen = nullptr;
  for (const auto& [model, users] : by_device) {
    if (!chosen || users.size() > chosen->size()) {
      chosen = &users;
      rep.device_model = model;
    }
  }
  if (!chosen || chosen->empty()) throw Error(ErrorKind::NoEligibleUsers, "no user meets the criteria");
  for (const auto& [model, users] : by_device)
    if (&users != chosen) rep.other_device_group += users.size();

  Dataset out;
  out.name = ds.name;
  for (const auto& u : *chosen) out.users[u] = ds.users.at(u);
  return out;
}

// ---------------------------------------------------------------------------
// Adapters: key=value files mapping a source layout onto the canonical format.
//
//   delimiter=;            field separator of the source (default ',')
//   header=true            first line names the columns
//   column.<field>=<name>  source column (by header name, or 0-based index)
//   const.<field>=<value>  fixed value for a field (e.g. dataset, device_model)
//   scale.<field>=<k>      multiply numeric field by k (unit conversion)
//   offset.<field>=<b>     then add b
//   phase.<down|move|up>=<source code>

struct AdapterConfig {
  char delimiter = ',';
  bool header = true;
  std::map<std::string, std::string> columns;
  std::map<std::string, std::string> constants;
  std::map<std::string, double> scale;
  std::map<std::string, double> offset;
  std::map<std::string, Phase> phase_codes;
};

inline AdapterConfig parse_adapter_config(std::istream& in) {
  AdapterConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::Config, "adapter line " + std::to_string(lineno) + ": expected key=value");
    const std::string key(detail::trim(view.substr(0, eq)));
    const std::string value(detail::trim(view.substr(eq + 1)));
    auto suffix = [&](std::string_view prefix) { return key.substr(prefix.size()); };
    if (key == "delimiter") {
      if (value == "\\t" || value == "tab") cfg.delimiter = '\t';
      else if (value.size() == 1) cfg.delimiter = value[0];
      else throw Error(ErrorKind::Config, "delimiter must be one character");
    } else if (key == "header") {
      cfg.header = value == "true" || value == "1";
    } else if (key.starts_with("column.")) {
      cfg.columns[suffix("column.")] = value;
    } else if (key.starts_with("const.")) {
      cfg.constants[suffix("const.")] = value;
    } else if (key.starts_with("scale.") || key.starts_with("offset.")) {
      const auto v = detail::parse_double(value);
      if (!v) throw Error(ErrorKind::Config, "adapter '" + key + "': not a number");
      if (key.starts_with("scale.")) cfg.scale[suffix("scale.")] = *v;
      else cfg.offset[suffix("offset.")] = *v;
    } else if (key.starts_with("phase.")) {
      const auto ph = detail::parse_phase(suffix("phase."));
      if (!ph) throw Error(ErrorKind::Config, "adapter '" + key + "': unknown phase");
      cfg.phase_codes[value] = *ph;
    } else {
      throw Error(ErrorKind::Config, "adapter: unknown key '" + key + "'");
    }
  }
  for (const auto& f : detail::canonical_columns())
    if (!cfg.columns.count(f) && !cfg.constants.count(f))
      throw Error(ErrorKind::Config, "adapter: no mapping for field '" + f + "'");
  return cfg;
}

struct AdapterReport {
  std::size_t rows = 0;
  std::size_t written = 0;
  std::size_t skipped = 0;
};

/// Converts a source table into canonical CSV. Rows that fail conversion are skipped.
inline AdapterReport apply_adapter(std::istream& in, const AdapterConfig& cfg, std::ostream& out) {
  AdapterReport rep;
  std::string line;
  std::map<std::string, std::size_t> header_pos;
  if (cfg.header) {
    if (!std::getline(in, line)) throw Error(ErrorKind::EmptyDataset, "adapter input is empty");
    const auto h = detail::split(line, cfg.delimiter);
    for (std::size_t i = 0; i < h.size(); ++i) header_pos[std::string(h[i])] = i;
  }
  auto resolve = [&](const std::string& col) -> std::size_t {
    if (auto it = header_pos.find(col); it != header_pos.end()) return it->second;
    const auto idx = detail::parse_double(col);
    if (!idx || *idx < 0) throw Error(ErrorKind::UnparseableHeader, "source column '" + col + "' not found");
    return static_cast<std::size_t>(*idx);
  };
  std::map<std::string, std::size_t> pos;
  for (const auto& [field, col] : cfg.columns) pos[field] = resolve(col);

  const std::set<std::string> numeric{"t_ms", "x", "y", "pressure", "area"};
  out << "dataset,user_id,session_id,device_model,t_ms,phase,x,y,pressure,area\n";
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++rep.rows;
    const auto f = detail::split(line, cfg.delimiter);
    std::vector<std::string> values;
    bool ok = true;
    for (const auto& field : detail::canonical_columns()) {
      std::string v;
      if (auto c = cfg.constants.find(field); c != cfg.constants.end()) {
        v = c->second;
      } else {
        const auto p = pos.at(field);
        if (p >= f.size()) {
          ok = false;
          break;
        }
        v = std::string(f[p]);
      }
      if (field == "phase" && !cfg.phase_codes.empty()) {
        const auto it = cfg.phase_codes.find(v);
        if (it == cfg.phase_codes.end()) {
          ok = false;
          break;
        }
        v = std::string(to_string(it->second));
      } else if (numeric.count(field) && !v.empty()) {
        auto d = detail::parse_double(v);
        if (!d) {
          ok = false;
          break;
        }
        double x = *d;
        if (auto s = cfg.scale.find(field); s != cfg.scale.end()) x *= s->second;
        if (auto o = cfg.offset.find(field); o != cfg.offset.end()) x += o->second;
        if (field == "t_ms") x = std::round(x);
        std::ostringstream os;
        os.precision(17);
        os << x;
        v = os.str();
      }
      values.push_back(std::move(v));
    }
    if (!ok) {
      ++rep.skipped;
      continue;
    }
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    out << '\n';
    ++rep.written;
  }
  return rep;
}

}  // namespace touchauth

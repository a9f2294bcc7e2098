#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "touchauth/error.hpp"
#include "touchauth/lstm.hpp"

namespace touchauth {

enum class AggregationMethod { None, Mean, Median, Vote, Feed, Trust, Stacking };

inline constexpr std::pair<AggregationMethod, std::string_view> kAggregationNames[] = {
    {AggregationMethod::None, "none"},   {AggregationMethod::Mean, "mean"},   {AggregationMethod::Median, "median"},
    {AggregationMethod::Vote, "vote"},   {AggregationMethod::Feed, "feed"},   {AggregationMethod::Trust, "trust"},
    {AggregationMethod::Stacking, "stacking"},
};

inline std::string_view to_string(AggregationMethod m) {
  for (const auto& [k, n] : kAggregationNames)
    if (k == m) return n;
  return "unknown";
}

inline AggregationMethod parse_aggregation_method(std::string_view name) {
  for (const auto& [k, n] : kAggregationNames)
    if (n == name) return k;
  throw Error(ErrorKind::Config, "unknown aggregation method '" + std::string(name) + "'");
}

struct TrustParams {
  double initial = 0.5;
  double threshold = 0.5;
  double reward_weight = 0.2;
  double penalty_weight = 0.2;
};

struct AggregationSpec {
  AggregationMethod method = AggregationMethod::None;
  int window = 5;
  double vote_threshold = 0.5;
  TrustParams trust{};
  StackerSpec stacker{};

  /// Window actually used: "none" always scores single swipes.
  int effective_window() const { return method == AggregationMethod::None ? 1 : window; }

  void validate() const {
    if (window < 1) throw Error(ErrorKind::Config, "aggregation window must be >= 1");
    if (!(vote_threshold > 0.0 && vote_threshold < 1.0)) throw Error(ErrorKind::Config, "vote_threshold must be in (0,1)");
    if (trust.initial < 0.0 || trust.initial > 1.0 || trust.threshold < 0.0 || trust.threshold > 1.0)
      throw Error(ErrorKind::Config, "trust initial/threshold must be in [0,1]");
    if (!(trust.reward_weight > 0.0) || !(trust.penalty_weight > 0.0))
      throw Error(ErrorKind::Config, "trust weights must be positive");
    if (stacker.hidden < 1 || stacker.epochs < 0 || stacker.batch_size < 1)
      throw Error(ErrorKind::Config, "invalid stacker settings");
  }

  /// Accepts a bare method name or an object.
  static AggregationSpec from_json(const nlohmann::json& j) {
    AggregationSpec s;
    if (j.is_null()) return s;
    if (j.is_string()) {
      s.method = parse_aggregation_method(j.get<std::string>());
      return s;
    }
    try {
      s.method = parse_aggregation_method(j.value("method", std::string("none")));
      s.window = j.value("window", s.window);
      s.vote_threshold = j.value("vote_threshold", s.vote_threshold);
      if (j.contains("trust")) {
        const auto& t = j.at("trust");
        s.trust.initial = t.value("initial", s.trust.initial);
        s.trust.threshold = t.value("threshold", s.trust.threshold);
        s.trust.reward_weight = t.value("reward_weight", s.trust.reward_weight);
        s.trust.penalty_weight = t.value("penalty_weight", s.trust.penalty_weight);
      }
      if (j.contains("stacker")) {
        const auto& t = j.at("stacker");
        s.stacker.hidden = t.value("hidden", s.stacker.hidden);
        s.stacker.epochs = t.value("epochs", s.stacker.epochs);
        s.stacker.batch_size = t.value("batch_size", s.stacker.batch_size);
        s.stacker.adam.learning_rate = t.value("learning_rate", s.stacker.adam.learning_rate);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad aggregation section: ") + e.what());
    }
    s.validate();
    return s;
  }

  std::string label() const {
    if (method == AggregationMethod::None) return "none";
    return std::string(to_string(method)) + "@" + std::to_string(window);
  }

  nlohmann::json to_json() const {
    return {{"method", std::string(to_string(method))},
            {"window", effective_window()},
            {"vote_threshold", vote_threshold},
            {"trust",
             {{"initial", trust.initial},
              {"threshold", trust.threshold},
              {"reward_weight", trust.reward_weight},
              {"penalty_weight", trust.penalty_weight}}},
            {"stacker",
             {{"hidden", stacker.hidden},
              {"epochs", stacker.epochs},
              {"batch_size", stacker.batch_size},
              {"learning_rate", stacker.adam.learning_rate}}}};
  }
};

/// Windows of `window` consecutive items inside each session. Sessions shorter
/// than the window contribute nothing and are counted in short_sessions.
template <class T>
std::vector<std::vector<T>> make_windows(const std::vector<std::vector<T>>& sessions, std::size_t window,
                                         std::size_t stride, std::size_t* short_sessions = nullptr) {
  std::vector<std::vector<T>> out;
  if (window == 0 || stride == 0) return out;
  for (const auto& s : sessions) {
    if (s.size() < window) {
      if (short_sessions) ++*short_sessions;
      continue;
    }
    for (std::size_t start = 0; start + window <= s.size(); start += stride)
      out.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(start),
                       s.begin() + static_cast<std::ptrdiff_t>(start + window));
  }
  return out;
}

inline double aggregate_scores(AggregationMethod method, std::span<const double> scores, double vote_threshold = 0.5) {
  if (scores.empty()) throw Error(ErrorKind::EmptyWindow, "empty score window");
  switch (method) {
    case AggregationMethod::None:
    case AggregationMethod::Mean: {
      double s = 0.0;
      for (double v : scores) s += v;
      return s / static_cast<double>(scores.size());
    }
    case AggregationMethod::Median: {
      std::vector<double> v(scores.begin(), scores.end());
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    case AggregationMethod::Vote: {
      const auto hits = std::count_if(scores.begin(), scores.end(), [&](double v) { return v >= vote_threshold; });
      return static_cast<double>(hits) / static_cast<double>(scores.size());
    }
    default:
      throw Error(ErrorKind::Config, "aggregate_scores handles mean, median and vote only");
  }
}

/// Chronological concatenation of equally sized rows (values or masks).
template <class T>
std::vector<T> feed_concat(const std::vector<std::vector<T>>& window) {
  if (window.empty()) throw Error(ErrorKind::EmptyWindow, "empty feature window");
  const std::size_t d = window.front().size();
  std::vector<T> out;
  out.reserve(d * window.size());
  for (const auto& v : window) {
    if (v.size() != d) throw Error(ErrorKind::HeterogeneousWindows, "feature vectors differ in dimension");
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

inline double trust_trace(std::span<const double> scores, const TrustParams& p = {}) {
  if (scores.empty()) throw Error(ErrorKind::EmptyWindow, "empty score window");
  double t = p.initial;
  for (double s : scores) {
    const double w = s >= p.threshold ? p.reward_weight : p.penalty_weight;
    t = std::clamp(t + w * (s - p.threshold), 0.0, 1.0);
  }
  return t;
}

inline LstmStacker train_stacker(const StackerSpec& spec, const std::vector<std::vector<double>>& sequences,
                                 const std::vector<int>& labels) {
  return LstmStacker::train(spec, sequences, labels);
}

inline double stack_score(const LstmStacker& model, std::span<const double> scores) { return model.predict(scores); }

}  // namespace touchauth

#pragma once

// Per-user evaluation: session split, disjoint attacker groups, balanced negative
// sampling, classifier training, optional window aggregation, ROC/EER.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "touchauth/aggregation.hpp"
#include "touchauth/classifier.hpp"
#include "touchauth/data.hpp"
#include "touchauth/error.hpp"
#include "touchauth/features.hpp"
#include "touchauth/roc.hpp"

namespace touchauth {

struct ProtocolConfig {
  double train_session_fraction = 0.8;
  int repetitions = 10;
  std::uint64_t seed = 0;
  double attacker_split_fraction = 0.5;

  void validate() const {
    if (!(train_session_fraction > 0.0 && train_session_fraction < 1.0))
      throw Error(ErrorKind::Config, "train_session_fraction must be in (0,1)");
    if (!(attacker_split_fraction > 0.0 && attacker_split_fraction < 1.0))
      throw Error(ErrorKind::Config, "attacker_split_fraction must be in (0,1)");
    if (repetitions < 1) throw Error(ErrorKind::Config, "repetitions must be >= 1");
  }

  static ProtocolConfig from_json(const nlohmann::json& j) {
    ProtocolConfig p;
    if (j.is_null()) return p;
    try {
      p.train_session_fraction = j.value("train_session_fraction", p.train_session_fraction);
      p.repetitions = j.value("repetitions", p.repetitions);
      p.seed = j.value("seed", p.seed);
      p.attacker_split_fraction = j.value("attacker_split_fraction", p.attacker_split_fraction);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad protocol section: ") + e.what());
    }
    p.validate();
    return p;
  }

  nlohmann::json to_json() const {
    return {{"train_session_fraction", train_session_fraction},
            {"repetitions", repetitions},
            {"seed", seed},
            {"attacker_split_fraction", attacker_split_fraction}};
  }
};

/// splitmix64 finalizer over a combined pair; used to derive independent streams.
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Number of earliest sessions used for training: max(1, floor(fraction*n)), but
/// always leaving at least one test session.
inline std::size_t train_session_count(std::size_t n_sessions, double fraction) {
  if (n_sessions < 2) throw Error(ErrorKind::TooFewSessions, "need at least 2 sessions, got " + std::to_string(n_sessions));
  auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_sessions) + 1e-9));
  n_train = std::max<std::size_t>(1, n_train);
  return std::min(n_train, n_sessions - 1);
}

/// Session indices (chronological) for training and testing.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_user_sessions(std::size_t n_sessions,
                                                                                       double fraction) {
  const std::size_t k = train_session_count(n_sessions, fraction);
  std::vector<std::size_t> train(k), test(n_sessions - k);
  std::iota(train.begin(), train.end(), 0);
  std::iota(test.begin(), test.end(), k);
  return {train, test};
}

/// Random disjoint partition; the train group receives ceil(fraction*n) users
/// (the extra user for odd counts at 0.5), clamped so both groups are non-empty.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_attackers(
    std::vector<std::size_t> others, std::mt19937_64& rng, double fraction = 0.5) {
  if (others.size() < 2) throw Error(ErrorKind::TooFewAttackers, "need at least 2 other users");
  std::shuffle(others.begin(), others.end(), rng);
  auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(others.size()) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, others.size() - 1);
  std::vector<std::size_t> train(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(others.begin() + static_cast<std::ptrdiff_t>(n_train), others.end());
  return {train, test};
}

/// Round-robin over the group in a random order, drawing one uniformly random item
/// (with replacement) per visit until `count` items are collected. Empty pools are
/// ignored; `visits` (if given) receives the per-pool draw counts.
template <class T>
std::vector<T> sample_negatives(const std::vector<std::vector<T>>& pools, std::size_t count, std::mt19937_64& rng,
                                std::vector<std::size_t>* visits = nullptr) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < pools.size(); ++i)
    if (!pools[i].empty()) order.push_back(i);
  if (order.empty()) throw Error(ErrorKind::EmptyGroup, "no attacker data to sample from");
  std::shuffle(order.begin(), order.end(), rng);
  if (visits) visits->assign(pools.size(), 0);
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t k = 0; out.size() < count; ++k) {
    const std::size_t p = order[k % order.size()];
    std::uniform_int_distribution<std::size_t> pick(0, pools[p].size() - 1);
    out.push_back(pools[p][pick(rng)]);
    if (visits) ++(*visits)[p];
  }
  return out;
}

/// Dataset, its precomputed feature table and the active feature subset.
struct EvaluationData {
  const Dataset* dataset = nullptr;
  const FeatureTable* table = nullptr;
  std::vector<int> feature_ids;

  std::size_t user_count() const { return table->vectors.size(); }
  std::size_t session_count(std::size_t u) const { return table->vectors[u].size(); }
  std::size_t swipe_count(std::size_t u, std::size_t s) const { return table->vectors[u][s].size(); }

  /// Selected features of one swipe; undefined values become NaN (imputed later).
  void append_row(const SwipeRef& r, std::vector<double>& out) const {
    const auto& fv = table->at(r);
    for (int id : feature_ids) out.push_back(fv.is_defined(id) ? fv[id] : std::nan(""));
  }

  /// Chronological swipe refs per session.
  std::vector<std::vector<SwipeRef>> streams(std::size_t u, const std::vector<std::size_t>& sessions) const {
    std::vector<std::vector<SwipeRef>> out;
    for (auto s : sessions) {
      auto& v = out.emplace_back();
      for (std::size_t i = 0; i < swipe_count(u, s); ++i) v.push_back({u, s, i});
    }
    return out;
  }
  std::vector<std::vector<SwipeRef>> all_streams(std::size_t u) const {
    std::vector<std::size_t> all(session_count(u));
    std::iota(all.begin(), all.end(), 0);
    return streams(u, all);
  }
};

/// Outcome of one (user, repetition) evaluation for each requested aggregation.
struct UserRepResult {
  std::vector<std::optional<double>> eer;  // per aggregation spec
  std::vector<std::string> skip_reason;    // empty when evaluated
  std::size_t train_positives = 0;
  std::size_t test_positives = 0;
  std::vector<RocCurve> roc;  // per aggregation spec (empty when skipped)
};

namespace detail {

using Window = std::vector<SwipeRef>;

inline void flatten_into(const std::vector<std::vector<SwipeRef>>& streams, std::vector<SwipeRef>& out) {
  for (const auto& s : streams) out.insert(out.end(), s.begin(), s.end());
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ProtocolViolation, what);
}

/// Builds a feature matrix from single swipes or from concatenated windows.
inline Matrix rows_of(const EvaluationData& data, const std::vector<Window>& windows) {
  Matrix X;
  std::vector<double> row;
  for (const auto& w : windows) {
    row.clear();
    for (const auto& r : w) data.append_row(r, row);
    X.append_row(row);
  }
  return X;
}

inline std::vector<Window> singletons(const std::vector<SwipeRef>& refs) {
  std::vector<Window> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back({r});
  return out;
}

class ScoreCache {
 public:
  ScoreCache(const EvaluationData& data, const TrainedModel& model) : data_(data), model_(model) {}

  void request(const Window& w) {
    for (const auto& r : w)
      if (!scores_.count(r)) pending_.insert(r);
  }
  void flush() {
    if (pending_.empty()) return;
    std::vector<SwipeRef> refs(pending_.begin(), pending_.end());
    const auto s = model_.score(rows_of(data_, singletons(refs)));
    for (std::size_t i = 0; i < refs.size(); ++i) scores_[refs[i]] = s[i];
    pending_.clear();
  }
  std::vector<double> scores(const Window& w) const {
    std::vector<double> out;
    for (const auto& r : w) out.push_back(scores_.at(r));
    return out;
  }

 private:
  const EvaluationData& data_;
  const TrainedModel& model_;
  std::set<SwipeRef> pending_;
  std::map<SwipeRef, double> scores_;
};

}  // namespace detail

/// Evaluates one target user for one repetition. All aggregation specs share the
/// single-swipe classifier except feed, which trains on concatenated windows.
inline UserRepResult run_user_evaluation(const EvaluationData& data, std::size_t target, const ClassifierSpec& spec,
                                         const std::vector<AggregationSpec>& aggregations,
                                         const ProtocolConfig& protocol, std::uint64_t repetition_seed) {
  using detail::Window;
  UserRepResult res;
  res.eer.assign(aggregations.size(), std::nullopt);
  res.skip_reason.assign(aggregations.size(), "");
  res.roc.assign(aggregations.size(), {});

  std::mt19937_64 rng(derive_seed(repetition_seed, target));
  const auto [train_sessions, test_sessions] = split_user_sessions(data.session_count(target), protocol.train_session_fraction);
  std::vector<std::size_t> others;
  for (std::size_t u = 0; u < data.user_count(); ++u)
    if (u != target) others.push_back(u);
  const auto [train_group, test_group] = partition_attackers(others, rng, protocol.attacker_split_fraction);

  // Disjointness of attacker groups.
  {
    std::set<std::size_t> a(train_group.begin(), train_group.end());
    for (auto u : test_group) detail::require(!a.count(u) && u != target, "attacker groups overlap");
    detail::require(!a.count(target), "target in attacker group");
    detail::require(train_group.size() + test_group.size() == others.size(), "attacker partition not exhaustive");
  }

  const auto genuine_train_streams = data.streams(target, train_sessions);
  const auto genuine_test_streams = data.streams(target, test_sessions);
  std::vector<SwipeRef> genuine_train, genuine_test;
  detail::flatten_into(genuine_train_streams, genuine_train);
  detail::flatten_into(genuine_test_streams, genuine_test);
  if (genuine_train.empty() || genuine_test.empty())
    throw Error(ErrorKind::TooFewSamples, "target has no training or test swipes");

  std::vector<std::vector<std::vector<SwipeRef>>> train_attacker_streams, test_attacker_streams;
  std::vector<std::vector<SwipeRef>> train_pools, test_pools;
  for (auto u : train_group) {
    train_attacker_streams.push_back(data.all_streams(u));
    detail::flatten_into(train_attacker_streams.back(), train_pools.emplace_back());
  }
  for (auto u : test_group) {
    test_attacker_streams.push_back(data.all_streams(u));
    detail::flatten_into(test_attacker_streams.back(), test_pools.emplace_back());
  }

  const std::set<std::size_t> test_session_set(test_sessions.begin(), test_sessions.end());
  const std::set<std::size_t> train_group_set(train_group.begin(), train_group.end());
  const std::set<std::size_t> test_group_set(test_group.begin(), test_group.end());
  auto check_training = [&](const std::vector<Window>& windows) {
    for (const auto& w : windows)
      for (const auto& r : w) {
        detail::require(!(r.user == target && test_session_set.count(r.session)),
                        "target test swipe leaked into training data");
        detail::require(r.user == target || train_group_set.count(r.user), "training negative from test group");
      }
  };
  auto check_testing = [&](const std::vector<Window>& windows) {
    for (const auto& w : windows)
      for (const auto& r : w)
        detail::require((r.user == target && test_session_set.count(r.session)) || test_group_set.count(r.user),
                        "test data outside target test sessions and test attackers");
  };

  auto train_model = [&](const std::vector<Window>& pos, const std::vector<Window>& neg, std::uint64_t salt) {
    detail::require(pos.size() == neg.size(), "train set not balanced");
    check_training(pos);
    check_training(neg);
    std::vector<Window> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    std::vector<int> labels(pos.size(), 1);
    labels.resize(all.size(), 0);
    ClassifierSpec s = spec;
    s.seed = derive_seed(spec.seed ^ repetition_seed, target * 16 + salt);
    for (auto& m : s.members) m.seed = s.seed;
    return TrainedModel::train(s, detail::rows_of(data, all), labels);
  };

  auto finish = [&](std::size_t a, const std::vector<double>& gen, const std::vector<double>& imp) {
    detail::require(gen.size() == imp.size(), "test set not balanced");
    res.roc[a] = compute_roc(gen, imp);
    res.eer[a] = compute_eer(res.roc[a]).eer;
  };

  res.train_positives = genuine_train.size();
  res.test_positives = genuine_test.size();

  // Single-swipe model shared by every score-level aggregation.
  bool needs_base = false;
  for (const auto& a : aggregations) needs_base |= a.method != AggregationMethod::Feed;
  std::optional<TrainedModel> base;
  std::optional<detail::ScoreCache> cache;
  if (needs_base) {
    const auto neg = sample_negatives(train_pools, genuine_train.size(), rng);
    base = train_model(detail::singletons(genuine_train), detail::singletons(neg), 0);
    cache.emplace(data, *base);
  }

  for (std::size_t a = 0; a < aggregations.size(); ++a) {
    const auto& agg = aggregations[a];
    const std::size_t w = static_cast<std::size_t>(agg.effective_window());
    std::mt19937_64 arng(derive_seed(derive_seed(repetition_seed, target), 1000 + a));

    // Test windows: non-overlapping, per role, per person, never across sessions.
    const auto gen_test = make_windows(genuine_test_streams, w, w);
    std::vector<std::vector<Window>> imp_pools;
    for (const auto& streams : test_attacker_streams) imp_pools.push_back(make_windows(streams, w, w));
    const bool any_imp = std::any_of(imp_pools.begin(), imp_pools.end(), [](const auto& p) { return !p.empty(); });
    if (gen_test.empty() || !any_imp) {
      res.skip_reason[a] = gen_test.empty() ? "no full genuine test window" : "no full impostor test window";
      continue;
    }
    const auto imp_test = sample_negatives(imp_pools, gen_test.size(), arng);
    check_testing(gen_test);
    check_testing(imp_test);

    if (agg.method == AggregationMethod::Feed) {
      const auto gen_train = make_windows(genuine_train_streams, w, 1);
      std::vector<std::vector<Window>> train_windows;
      for (const auto& streams : train_attacker_streams) train_windows.push_back(make_windows(streams, w, 1));
      if (gen_train.empty()) {
        res.skip_reason[a] = "no full genuine training window";
        continue;
      }
      const auto neg = sample_negatives(train_windows, gen_train.size(), arng);
      const auto model = train_model(gen_train, neg, 1 + a);
      finish(a, model.score(detail::rows_of(data, gen_test)), model.score(detail::rows_of(data, imp_test)));
      continue;
    }

    for (const auto& win : gen_test) cache->request(win);
    for (const auto& win : imp_test) cache->request(win);

    std::optional<LstmStacker> stacker;
    if (agg.method == AggregationMethod::Stacking) {
      const auto gen_train = make_windows(genuine_train_streams, w, 1);
      std::vector<std::vector<Window>> train_windows;
      for (const auto& streams : train_attacker_streams) train_windows.push_back(make_windows(streams, w, 1));
      const bool any_train_imp =
          std::any_of(train_windows.begin(), train_windows.end(), [](const auto& p) { return !p.empty(); });
      if (gen_train.empty() || !any_train_imp) {
        res.skip_reason[a] = "no full stacker training window";
        continue;
      }
      const auto neg = sample_negatives(train_windows, gen_train.size(), arng);
      check_training(gen_train);
      check_training(neg);
      for (const auto& win : gen_train) cache->request(win);
      for (const auto& win : neg) cache->request(win);
      cache->flush();
      std::vector<std::vector<double>> seqs;
      std::vector<int> labels;
      for (const auto& win : gen_train) {
        seqs.push_back(cache->scores(win));
        labels.push_back(1);
      }
      for (const auto& win : neg) {
        seqs.push_back(cache->scores(win));
        labels.push_back(0);
      }
      StackerSpec ss = agg.stacker;
      ss.seed = derive_seed(derive_seed(repetition_seed, target), 2000 + a);
      stacker = train_stacker(ss, seqs, labels);
    }
    cache->flush();

    auto window_score = [&](const Window& win) {
      const auto s = cache->scores(win);
      switch (agg.method) {
        case AggregationMethod::Trust: return trust_trace(s, agg.trust);
        case AggregationMethod::Stacking: return stack_score(*stacker, s);
        default: return aggregate_scores(agg.method, s, agg.vote_threshold);
      }
    };
    std::vector<double> gen, imp;
    for (const auto& win : gen_test) gen.push_back(window_score(win));
    for (const auto& win : imp_test) imp.push_back(window_score(win));
    finish(a, gen, imp);
  }
  return res;
}

/// Results of one experiment cell (one aggregation spec).
struct EvalReport {
  std::string feature_set;
  std::string classifier;
  AggregationSpec aggregation;
  std::size_t feature_count = 0;
  std::vector<std::string> user_ids;
  std::vector<std::vector<std::optional<double>>> eer;  // [user][repetition]
  std::vector<std::optional<double>> user_mean;          // mean over evaluated repetitions
  std::vector<std::string> skip_reason;                  // per user; empty when evaluated
  double mean_eer = std::nan("");
  double std_eer = std::nan("");
  std::size_t users_evaluated = 0;
  std::size_t users_skipped = 0;
  std::vector<RocCurve> roc;  // per user, first repetition (when requested)

  void summarize() {
    user_mean.assign(eer.size(), std::nullopt);
    std::vector<double> means;
    for (std::size_t u = 0; u < eer.size(); ++u) {
      double s = 0.0;
      int n = 0;
      for (const auto& e : eer[u])
        if (e) {
          s += *e;
          ++n;
        }
      if (n > 0) {
        user_mean[u] = s / n;
        means.push_back(*user_mean[u]);
      }
    }
    users_evaluated = means.size();
    users_skipped = eer.size() - means.size();
    if (means.empty()) return;
    mean_eer = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mean_eer) * (m - mean_eer);
    std_eer = std::sqrt(ss / static_cast<double>(means.size()));
  }

  nlohmann::json to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json users = nlohmann::json::array();
    for (std::size_t u = 0; u < user_ids.size(); ++u) {
      nlohmann::json reps = nlohmann::json::array();
      for (const auto& e : eer[u]) reps.push_back(e ? nlohmann::json(*e) : nlohmann::json(nullptr));
      nlohmann::json entry{{"user_id", user_ids[u]},
                           {"eer", reps},
                           {"mean_eer", user_mean[u] ? nlohmann::json(*user_mean[u]) : nlohmann::json(nullptr)}};
      if (!skip_reason[u].empty()) entry["skipped"] = skip_reason[u];
      if (u < roc.size() && !roc[u].empty()) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : roc[u]) pts.push_back({p.threshold, p.far, p.frr});
        entry["roc"] = pts;
      }
      users.push_back(entry);
    }
    return {{"feature_set", feature_set},
            {"feature_count", feature_count},
            {"classifier", classifier},
            {"aggregation", aggregation.to_json()},
            {"mean_eer", num(mean_eer)},
            {"std_eer", num(std_eer)},
            {"users_evaluated", users_evaluated},
            {"users_skipped", users_skipped},
            {"users", users}};
  }
};

struct RunOptions {
  int workers = 1;
  bool keep_roc = false;
};

/// Evaluates every user for every repetition (repetition r uses seed + r) and
/// returns one report per aggregation spec.
inline std::vector<EvalReport> run_experiment(const EvaluationData& data, const ClassifierSpec& spec,
                                              const std::vector<AggregationSpec>& aggregations,
                                              const ProtocolConfig& protocol, const RunOptions& options = {}) {
  protocol.validate();
  for (const auto& a : aggregations) a.validate();
  const std::size_t U = data.user_count(), R = static_cast<std::size_t>(protocol.repetitions);
  if (U < 3) throw Error(ErrorKind::TooFewAttackers, "evaluation needs at least 3 users");

  std::vector<UserRepResult> results(U * R);
  std::vector<std::string> errors(U * R);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < U * R; k = next++) {
      const std::size_t u = k / R, r = k % R;
      try {
        results[k] = run_user_evaluation(data, u, spec, aggregations, protocol, protocol.seed + r);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ProtocolViolation) throw;
        errors[k] = e.what();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(options.workers, static_cast<int>(U * R)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex m;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
          next = U * R;
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<EvalReport> reports(aggregations.size());
  for (std::size_t a = 0; a < aggregations.size(); ++a) {
    auto& rep = reports[a];
    rep.classifier = spec.name();
    rep.aggregation = aggregations[a];
    rep.feature_count = data.feature_ids.size();
    rep.user_ids = data.table->user_ids;
    rep.eer.assign(U, std::vector<std::optional<double>>(R));
    rep.skip_reason.assign(U, "");
    if (options.keep_roc) rep.roc.assign(U, {});
    for (std::size_t u = 0; u < U; ++u) {
      for (std::size_t r = 0; r < R; ++r) {
        const auto& res = results[u * R + r];
        if (!errors[u * R + r].empty()) {
          rep.skip_reason[u] = errors[u * R + r];
          continue;
        }
        rep.eer[u][r] = res.eer[a];
        if (!res.eer[a] && rep.skip_reason[u].empty()) rep.skip_reason[u] = res.skip_reason[a];
        if (options.keep_roc && r == 0) rep.roc[u] = res.roc[a];
      }
      if (std::any_of(rep.eer[u].begin(), rep.eer[u].end(), [](const auto& e) { return e.has_value(); }))
        rep.skip_reason[u].clear();
    }
    rep.summarize();
  }
  return reports;
}

}  // namespace touchauth

#include <random>
#include <set>

#include "support.hpp"

using namespace touchauth;

namespace {

struct Fixture {
  Dataset dataset;
  FeatureTable table;
  EvaluationData data() const { return {&dataset, &table, all_feature_ids()}; }
};

Fixture synthetic(int users, int sessions, int swipes, double separability, std::uint64_t seed) {
  SyntheticSpec s;
  s.users = users;
  s.sessions_per_user = sessions;
  s.swipes_per_session = swipes;
  s.separability = separability;
  s.seed = seed;
  Fixture f;
  f.dataset = generate_synthetic(s);
  f.table = extract_dataset(f.dataset);
  return f;
}

ClassifierSpec logistic() { return ClassifierSpec::defaults(ClassifierKind::LogisticRegression, 1); }

}  // namespace

TEST(Protocol, SessionSplits) {
  const std::vector<std::pair<std::size_t, std::size_t>> cases{{5, 4}, {2, 1}, {10, 8}, {3, 2}, {4, 3}};
  for (auto [n, train] : cases) {
    const auto [tr, te] = split_user_sessions(n, 0.8);
    EXPECT_EQ(tr.size(), train) << n;
    EXPECT_EQ(tr.size() + te.size(), n);
    EXPECT_EQ(tr.back() + 1, te.front());
  }
  EXPECT_EQ(train_session_count(2, 0.1), 1u);
  EXPECT_EQ(train_session_count(3, 0.99), 2u);
  EXPECT_ERROR_KIND(split_user_sessions(1, 0.8), ErrorKind::TooFewSessions);
}

TEST(Protocol, AttackerPartition) {
  for (std::size_t n : {10u, 7u, 2u, 3u}) {
    std::vector<std::size_t> others(n);
    std::iota(others.begin(), others.end(), 100);
    std::mt19937_64 rng(n);
    const auto [a, b] = partition_attackers(others, rng);
    EXPECT_EQ(a.size(), (n + 1) / 2);
    EXPECT_EQ(b.size(), n / 2);
    std::set<std::size_t> all(a.begin(), a.end());
    for (auto u : b) EXPECT_TRUE(all.insert(u).second) << "overlap";
    EXPECT_EQ(all, std::set<std::size_t>(others.begin(), others.end()));

    std::mt19937_64 again(n);
    EXPECT_EQ(partition_attackers(others, again), std::make_pair(a, b));
  }
  std::mt19937_64 rng(1);
  EXPECT_ERROR_KIND(partition_attackers({4}, rng), ErrorKind::TooFewAttackers);
}

TEST(Protocol, NegativeSamplingCycles) {
  std::mt19937_64 rng(9);
  std::vector<std::size_t> visits;
  const std::vector<std::vector<int>> three{{1, 2}, {3}, {4, 5, 6}};
  const auto one_each = sample_negatives(three, 3, rng, &visits);
  EXPECT_EQ(visits, (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_EQ(one_each.size(), 3u);

  const std::vector<std::vector<int>> two{{1}, {2}};
  sample_negatives(two, 5, rng, &visits);
  std::sort(visits.begin(), visits.end());
  EXPECT_EQ(visits, (std::vector<std::size_t>{2, 3}));

  EXPECT_ERROR_KIND(sample_negatives(std::vector<std::vector<int>>{{}, {}}, 2, rng), ErrorKind::EmptyGroup);
}

TEST(Protocol, NegativeSamplingFrequencies) {
  std::vector<std::vector<int>> pools(2);
  for (int i = 0; i < 10; ++i) {
    pools[0].push_back(i);
    pools[1].push_back(100 + i);
  }
  std::mt19937_64 rng(12345);
  const auto drawn = sample_negatives(pools, 10000, rng);
  std::array<int, 2> per_user{};
  std::array<int, 20> per_item{};
  for (int v : drawn) {
    ++per_user[v >= 100];
    ++per_item[static_cast<std::size_t>(v >= 100 ? 10 + v - 100 : v)];
  }
  for (int c : per_user) EXPECT_NEAR(c, 5000, 250);
  // draws inside a user are uniform with replacement: each item near 500
  for (int c : per_item) EXPECT_NEAR(c, 500, 100);
}

TEST(Protocol, DeriveSeedIsDeterministicAndSpread) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(a, b));
  EXPECT_EQ(seen.size(), 2500u);
}

TEST(Protocol, ConfigValidation) {
  const auto p = ProtocolConfig::from_json({{"repetitions", 3}, {"seed", 5}});
  EXPECT_EQ(p.repetitions, 3);
  EXPECT_EQ(p.train_session_fraction, 0.8);
  EXPECT_EQ(p.attacker_split_fraction, 0.5);
  EXPECT_ERROR_KIND(ProtocolConfig::from_json({{"repetitions", 0}}), ErrorKind::Config);
  EXPECT_ERROR_KIND(ProtocolConfig::from_json({{"train_session_fraction", 1.0}}), ErrorKind::Config);
  EXPECT_ERROR_KIND(ProtocolConfig::from_json({{"attacker_split_fraction", 0.0}}), ErrorKind::Config);
}

TEST(Protocol, UserEvaluationIsBalancedAndRepeatable) {
  const auto f = synthetic(6, 3, 10, 6.0, 42);
  const auto data = f.data();
  ProtocolConfig p;
  const std::vector<AggregationSpec> aggs{AggregationSpec::from_json("none"),
                                          AggregationSpec::from_json({{"method", "mean"}, {"window", 5}}),
                                          AggregationSpec::from_json({{"method", "feed"}, {"window", 2}})};
  for (std::size_t u = 0; u < data.user_count(); ++u) {
    const auto a = run_user_evaluation(data, u, logistic(), aggs, p, 7);
    const auto b = run_user_evaluation(data, u, logistic(), aggs, p, 7);
    EXPECT_EQ(a.train_positives, 20u);
    EXPECT_EQ(a.test_positives, 10u);
    for (std::size_t k = 0; k < aggs.size(); ++k) {
      ASSERT_TRUE(a.eer[k].has_value()) << a.skip_reason[k];
      EXPECT_EQ(a.eer[k], b.eer[k]);
      EXPECT_GE(*a.eer[k], 0.0);
      EXPECT_LE(*a.eer[k], 1.0);
    }
  }
}

TEST(Protocol, ShortTestSessionsSkipAggregation) {
  const auto f = synthetic(5, 2, 4, 6.0, 3);
  const std::vector<AggregationSpec> aggs{AggregationSpec::from_json("none"),
                                          AggregationSpec::from_json({{"method", "median"}, {"window", 5}})};
  const auto r = run_user_evaluation(f.data(), 0, logistic(), aggs, {}, 1);
  EXPECT_TRUE(r.eer[0].has_value());
  EXPECT_FALSE(r.eer[1].has_value());
  EXPECT_FALSE(r.skip_reason[1].empty());
}

TEST(Protocol, MeanEerIsAverageOfUserMeans) {
  const auto f = synthetic(5, 3, 8, 1.0, 8);
  ProtocolConfig p;
  p.repetitions = 3;
  p.seed = 11;
  const auto reports = run_experiment(f.data(), logistic(), {AggregationSpec{}}, p);
  ASSERT_EQ(reports.size(), 1u);
  const auto& r = reports[0];
  double sum = 0.0;
  for (std::size_t u = 0; u < r.eer.size(); ++u) {
    double s = 0.0;
    for (const auto& e : r.eer[u]) s += e.value();
    EXPECT_NEAR(*r.user_mean[u], s / 3.0, 1e-15);
    sum += *r.user_mean[u];
  }
  EXPECT_NEAR(r.mean_eer, sum / 5.0, 1e-15);
  EXPECT_EQ(r.users_evaluated, 5u);

  // repetition r uses seed + r: the second repetition equals a fresh run seeded at 12
  ProtocolConfig shifted = p;
  shifted.repetitions = 1;
  shifted.seed = 12;
  const auto one = run_experiment(f.data(), logistic(), {AggregationSpec{}}, shifted);
  for (std::size_t u = 0; u < r.eer.size(); ++u) EXPECT_EQ(one[0].eer[u][0], r.eer[u][1]);

  RunOptions threaded;
  threaded.workers = 4;
  const auto par = run_experiment(f.data(), logistic(), {AggregationSpec{}}, p, threaded);
  EXPECT_EQ(par[0].eer, r.eer);
}

TEST(Protocol, ZeroVarianceFixtureIgnoresRepetitions) {
  auto f = synthetic(5, 2, 6, 4.0, 1);
  const FeatureVector same = f.table.vectors[0][0][0];
  for (auto& user : f.table.vectors)
    for (auto& session : user)
      for (auto& v : session) v = same;
  ProtocolConfig p;
  p.repetitions = 1;
  const double once = run_experiment(f.data(), logistic(), {AggregationSpec{}}, p)[0].mean_eer;
  p.repetitions = 10;
  const double ten = run_experiment(f.data(), logistic(), {AggregationSpec{}}, p)[0].mean_eer;
  EXPECT_EQ(once, 0.5);
  EXPECT_EQ(ten, once);
}

TEST(Protocol, IndistinguishableUsersNearChance) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto f = synthetic(6, 3, 12, 0.0, 500 + seed);
    ProtocolConfig p;
    p.repetitions = 1;
    p.seed = seed;
    total += run_experiment(f.data(), logistic(), {AggregationSpec{}}, p)[0].mean_eer;
  }
  const double mean = total / 10.0;
  EXPECT_GE(mean, 0.4);
  EXPECT_LE(mean, 0.6);
}

TEST(Protocol, TooFewUsers) {
  const auto f = synthetic(2, 2, 5, 1.0, 1);
  EXPECT_ERROR_KIND(run_experiment(f.data(), logistic(), {AggregationSpec{}}, {}), ErrorKind::TooFewAttackers);
}

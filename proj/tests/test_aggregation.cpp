#include <random>

#include "support.hpp"

using namespace touchauth;

namespace {

std::vector<std::vector<int>> sessions_of(std::initializer_list<int> sizes) {
  std::vector<std::vector<int>> out;
  int next = 0;
  for (int n : sizes) {
    auto& s = out.emplace_back();
    for (int i = 0; i < n; ++i) s.push_back(next++);
  }
  return out;
}

LstmStacker constant_fixture(std::uint64_t seed) {
  std::vector<std::vector<double>> seqs;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    seqs.push_back(std::vector<double>(5, 0.9));
    labels.push_back(1);
    seqs.push_back(std::vector<double>(5, 0.1));
    labels.push_back(0);
  }
  StackerSpec spec;
  spec.seed = seed;
  return train_stacker(spec, seqs, labels);
}

}  // namespace

TEST(Windows, CountsAndSessionBoundaries) {
  std::size_t short_sessions = 0;
  EXPECT_EQ(make_windows(sessions_of({7}), 5, 1).size(), 3u);
  EXPECT_EQ(make_windows(sessions_of({7}), 5, 5).size(), 1u);
  EXPECT_TRUE(make_windows(sessions_of({4, 4}), 5, 1, &short_sessions).empty());
  EXPECT_EQ(short_sessions, 2u);

  const auto w = make_windows(sessions_of({6, 5}), 5, 1);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(w[1], (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(w[2], (std::vector<int>{6, 7, 8, 9, 10}));
}

TEST(ScoreAggregation, Examples) {
  const std::vector<double> a{0.2, 0.4, 0.6}, b{0.9, 0.1, 0.5}, c{0.9, 0.8, 0.2, 0.1, 0.7};
  EXPECT_NEAR(aggregate_scores(AggregationMethod::Mean, a), 0.4, 1e-15);
  EXPECT_EQ(aggregate_scores(AggregationMethod::Median, b), 0.5);
  EXPECT_NEAR(aggregate_scores(AggregationMethod::Vote, c, 0.5), 0.6, 1e-15);
  const std::vector<double> even{0.4, 0.1, 0.3, 0.2};
  EXPECT_NEAR(aggregate_scores(AggregationMethod::Median, even), 0.25, 1e-15);
  EXPECT_ERROR_KIND(aggregate_scores(AggregationMethod::Mean, std::vector<double>{}), ErrorKind::EmptyWindow);
  EXPECT_ERROR_KIND(trust_trace(std::vector<double>{}), ErrorKind::EmptyWindow);
}

TEST(ScoreAggregation, FuzzedProperties) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (auto& v : s) v = u(rng);
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    for (auto m : {AggregationMethod::Mean, AggregationMethod::Median}) {
      const double r = aggregate_scores(m, s);
      EXPECT_GE(r, *lo - 1e-15);
      EXPECT_LE(r, *hi + 1e-15);
    }
    // vote lives on the grid {0, 1/w, ..., 1}
    const double vote = aggregate_scores(AggregationMethod::Vote, s);
    const double scaled = vote * static_cast<double>(s.size());
    EXPECT_NEAR(scaled, std::round(scaled), 1e-9);
    // perturbation that stays on the same side of the threshold
    auto moved = s;
    for (auto& v : moved) v = v >= 0.5 ? 0.5 + 0.5 * (v - 0.5) : 0.5 * v;
    EXPECT_EQ(aggregate_scores(AggregationMethod::Vote, moved), vote);

    const double t = trust_trace(s);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
    // raising one score never lowers trust
    auto raised = s;
    const std::size_t k = static_cast<std::size_t>(trial) % s.size();
    raised[k] = std::min(1.0, raised[k] + u(rng));
    EXPECT_GE(trust_trace(raised), t - 1e-15);
  }
}

TEST(ScoreAggregation, WindowOfOne) {
  for (double s : {0.0, 0.3, 0.5, 0.77, 1.0}) {
    const std::vector<double> one{s};
    EXPECT_EQ(aggregate_scores(AggregationMethod::Mean, one), s);
    EXPECT_EQ(aggregate_scores(AggregationMethod::Median, one), s);
    EXPECT_EQ(aggregate_scores(AggregationMethod::Vote, one), s >= 0.5 ? 1.0 : 0.0);
    EXPECT_NEAR(trust_trace(one), std::clamp(0.5 + 0.2 * (s - 0.5), 0.0, 1.0), 1e-15);
  }
}

TEST(Trust, Examples) {
  EXPECT_NEAR(trust_trace(std::vector<double>{0.9}), 0.58, 1e-15);
  EXPECT_EQ(trust_trace(std::vector<double>(7, 0.5)), 0.5);
  // stepwise: 0.5 +0.08 -0.08 +0.08 -0.08 +0.08
  EXPECT_NEAR(trust_trace(std::vector<double>{0.9, 0.1, 0.9, 0.1, 0.9}), 0.58, 1e-12);

  TrustParams p;
  p.initial = 0.9;
  p.reward_weight = 1.0;
  EXPECT_EQ(trust_trace(std::vector<double>{1.0, 1.0}, p), 1.0);
  p.initial = 0.1;
  p.penalty_weight = 1.0;
  EXPECT_EQ(trust_trace(std::vector<double>{0.0}, p), 0.0);
}

TEST(Feed, Concatenation) {
  std::vector<std::vector<double>> window;
  for (int s = 0; s < 5; ++s) {
    auto& v = window.emplace_back();
    for (int f = 0; f < 10; ++f) v.push_back(s * 100 + f);
  }
  const auto cat = feed_concat(window);
  ASSERT_EQ(cat.size(), 50u);
  EXPECT_EQ(cat[0], 0.0);
  EXPECT_EQ(cat[49], 409.0);
  EXPECT_EQ(feed_concat(std::vector<std::vector<double>>{window[2]}), window[2]);
  auto swapped = window;
  std::swap(swapped[0], swapped[1]);
  EXPECT_NE(feed_concat(swapped), cat);

  window[3].pop_back();
  EXPECT_ERROR_KIND(feed_concat(window), ErrorKind::HeterogeneousWindows);
  EXPECT_ERROR_KIND(feed_concat(std::vector<std::vector<double>>{}), ErrorKind::EmptyWindow);
}

TEST(Stacker, SeparatesConstantFixture) {
  const auto model = constant_fixture(3);
  const std::vector<double> gen(5, 0.9), imp(5, 0.1);
  EXPECT_GE(stack_score(model, gen), 0.9);
  EXPECT_LE(stack_score(model, imp), 0.1);
  EXPECT_EQ(stack_score(model, gen), stack_score(model, gen));

  std::vector<double> mixed{0.1, 0.1, 0.2, 0.1, 0.15};
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(mixed.begin(), mixed.end(), rng);
    EXPECT_LE(stack_score(model, mixed), 0.5);
  }
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s(5);
    for (auto& v : s) v = u(rng);
    const double out = stack_score(model, s);
    EXPECT_GT(out, 0.0);
    EXPECT_LT(out, 1.0);
  }
}

TEST(Stacker, DeterministicAndSerializable) {
  const auto a = constant_fixture(11), b = constant_fixture(11);
  const std::vector<double> s{0.3, 0.7, 0.5, 0.6, 0.2};
  EXPECT_EQ(stack_score(a, s), stack_score(b, s));
  const auto c = LstmStacker::from_json(a.to_json());
  EXPECT_EQ(stack_score(c, s), stack_score(a, s));
}

TEST(Stacker, Errors) {
  const auto model = constant_fixture(3);
  EXPECT_ERROR_KIND(stack_score(model, std::vector<double>(4, 0.5)), ErrorKind::LengthMismatch);
  StackerSpec spec;
  spec.epochs = 1;
  EXPECT_ERROR_KIND(train_stacker(spec, {{0.1, 0.2}, {0.3}}, {1, 0}), ErrorKind::InconsistentSequenceLength);
  EXPECT_ERROR_KIND(train_stacker(spec, {}, {}), ErrorKind::InconsistentSequenceLength);
}

TEST(AggregationSpec, ParsingAndLabels) {
  auto spec = AggregationSpec::from_json({{"method", "stacking"}, {"window", 7}});
  EXPECT_EQ(spec.method, AggregationMethod::Stacking);
  EXPECT_EQ(spec.label(), "stacking@7");
  EXPECT_EQ(AggregationSpec::from_json({{"method", "none"}, {"window", 9}}).effective_window(), 1);
  EXPECT_EQ(AggregationSpec::from_json({{"method", "none"}}).label(), "none");
  EXPECT_EQ(AggregationSpec::from_json({{"method", "mean"}}).window, 5);
  auto round = AggregationSpec::from_json(spec.to_json());
  EXPECT_EQ(round.label(), spec.label());

  EXPECT_ERROR_KIND(AggregationSpec::from_json({{"method", "majority"}}), ErrorKind::Config);
  EXPECT_ERROR_KIND(AggregationSpec::from_json({{"method", "mean"}, {"window", 0}}), ErrorKind::Config);
  EXPECT_ERROR_KIND(AggregationSpec::from_json({{"method", "vote"}, {"vote_threshold", 1.0}}), ErrorKind::Config);
}

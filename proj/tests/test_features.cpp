#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "support.hpp"

using namespace touchauth;
using testutil::rel_err;
using testutil::sample;

namespace {

nlohmann::json load_golden() {
  std::ifstream in(std::string(TOUCHAUTH_TEST_DATA) + "/feature_golden.json");
  EXPECT_TRUE(in.good()) << "missing feature_golden.json";
  return nlohmann::json::parse(in);
}

using checks::is_position_feature;
using checks::is_x_feature;
using checks::swipe_from_json;

}  // namespace

TEST(FeatureGolden, MatchesIndependentOracle) {
  const auto golden = load_golden();
  ASSERT_GE(golden.size(), 51u);
  std::size_t compared = 0;
  for (const auto& c : golden) {
    const auto swipe = swipe_from_json(c["samples"]);
    SwipeContext ctx;
    if (!c["previous_end"].is_null()) ctx.previous_swipe_end = c["previous_end"].get<std::int64_t>();
    const auto fv = extract_all_features(swipe, ctx);
    for (int id = 1; id <= kFeatureCount; ++id) {
      const auto i = static_cast<std::size_t>(id - 1);
      const bool expect_defined = c["defined"][i].get<bool>();
      ASSERT_EQ(fv.is_defined(id), expect_defined) << c["name"] << " feature " << id;
      const double want = c["values"][i].get<double>();
      EXPECT_LE(rel_err(fv[id], want), 1e-9) << c["name"] << " feature " << id << ": " << fv[id] << " vs " << want;
      ++compared;
    }
  }
  EXPECT_EQ(compared, golden.size() * kFeatureCount);
}

TEST(Kinematics, Examples) {
  Swipe s{"u", "s", "d", {sample(0, 0, 0, 0.5, 0.1, Phase::Down), sample(1000, 3, 4, 0.5, 0.1, Phase::Up)}};
  const auto k = compute_kinematics(s);
  ASSERT_EQ(k.velocity.size(), 1u);
  EXPECT_DOUBLE_EQ(k.velocity[0], 5.0);

  Swipe line{"u", "s", "d", {}};
  for (int i = 0; i < 6; ++i) line.samples.push_back(sample(16 * i, 2.0 * i, 3.0 * i));
  const auto kl = compute_kinematics(line);
  EXPECT_EQ(kl.velocity.size(), 5u);
  EXPECT_EQ(kl.acceleration.size(), 4u);
  EXPECT_EQ(kl.deviation.size(), 6u);
  for (double d : kl.deviation) EXPECT_NEAR(d, 0.0, 1e-12);
  for (double a : kl.pairwise_angle) EXPECT_NEAR(a, 0.0, 1e-12);
}

TEST(Kinematics, SixPointStepByStep) {
  const double pts[6][3] = {{0, 10, 20}, {12, 14, 25}, {30, 21, 27}, {41, 30, 26}, {60, 36, 31}, {75, 40, 40}};
  Swipe s{"u", "s", "d", {}};
  for (const auto& p : pts) s.samples.push_back(sample(static_cast<std::int64_t>(p[0]), p[1], p[2]));
  const auto k = compute_kinematics(s);
  for (int i = 0; i < 5; ++i) {
    const double dx = pts[i + 1][1] - pts[i][1], dy = pts[i + 1][2] - pts[i][2];
    const double dt = (pts[i + 1][0] - pts[i][0]) / 1000.0;
    EXPECT_NEAR(k.velocity[static_cast<std::size_t>(i)], std::sqrt(dx * dx + dy * dy) / dt, 1e-9);
    EXPECT_NEAR(k.phase_angle[static_cast<std::size_t>(i)], std::atan2(dy, dx), 1e-15);
  }
  for (int j = 0; j < 4; ++j) {
    const double dt_mid = ((pts[j + 2][0] - pts[j][0]) / 2.0) / 1000.0;
    EXPECT_NEAR(k.acceleration[static_cast<std::size_t>(j)],
                (k.velocity[static_cast<std::size_t>(j + 1)] - k.velocity[static_cast<std::size_t>(j)]) / dt_mid, 1e-6);
    const double a1 = std::atan2(pts[j + 1][2] - pts[j][2], pts[j + 1][1] - pts[j][1]);
    const double a2 = std::atan2(pts[j + 2][2] - pts[j + 1][2], pts[j + 2][1] - pts[j + 1][1]);
    double turn = a2 - a1;
    while (turn > std::numbers::pi) turn -= 2 * std::numbers::pi;
    while (turn <= -std::numbers::pi) turn += 2 * std::numbers::pi;
    EXPECT_NEAR(k.pairwise_angle[static_cast<std::size_t>(j)], turn, 1e-12);
  }
  // distance to the line through first and last point, via the triangle area
  const double ax = pts[0][1], ay = pts[0][2], bx = pts[5][1], by = pts[5][2];
  for (int i = 0; i < 6; ++i) {
    const double area2 = std::abs((bx - ax) * (pts[i][2] - ay) - (by - ay) * (pts[i][1] - ax));
    EXPECT_NEAR(k.deviation[static_cast<std::size_t>(i)], area2 / std::hypot(bx - ax, by - ay), 1e-12);
  }
}

TEST(Kinematics, DegenerateChordUsesDistanceToStart) {
  Swipe s{"u", "s", "d", {sample(0, 0, 0), sample(10, 3, 4), sample(20, 6, 0), sample(40, 0, 0)}};
  const auto k = compute_kinematics(s);
  EXPECT_DOUBLE_EQ(k.deviation[1], 5.0);
  EXPECT_DOUBLE_EQ(k.deviation[2], 6.0);
  EXPECT_EQ(k.ldp_index, 2u);
}

TEST(Features, StraightSwipeExamples) {
  Swipe s{"u", "s", "d", {}};
  for (int i = 0; i < 5; ++i) s.samples.push_back(sample(10 * i, 0.75 * i, 1.0 * i, 0.7, 0.1));
  const auto fv = extract_all_features(s);
  EXPECT_NEAR(fv[6], 5.0, 1e-12);
  EXPECT_NEAR(fv[9], 5.0, 1e-12);
  EXPECT_NEAR(fv[18], 1.0, 1e-12);
  EXPECT_NEAR(fv[35], 0.7, 1e-15);
  EXPECT_EQ(fv[40], 0.0);
  EXPECT_TRUE(fv.is_defined(40));
  // constant pressure has no skewness
  EXPECT_FALSE(fv.is_defined(113));
  EXPECT_FALSE(fv.is_defined(10));
}

TEST(Features, MeanResultantLengthExtremes) {
  // displacements alternating right and left: phase angles {0, pi}
  Swipe back_forth{"u", "s", "d", {sample(0, 0, 0), sample(10, 5, 0), sample(20, 0, 0), sample(30, 5, 0), sample(40, 0, 0)}};
  EXPECT_NEAR(extract_all_features(back_forth)[11], 0.0, 1e-12);
  EXPECT_NEAR(extract_all_features(testutil::line_swipe(8, 0, 16, 5.0, 0.0))[11], 1.0, 1e-3);
  Swipe straight{"u", "s", "d", {sample(0, 0, 0), sample(10, 1, 1), sample(20, 2, 2), sample(30, 3, 3)}};
  EXPECT_NEAR(extract_all_features(straight)[11], 1.0, 1e-12);
}

TEST(Features, ShortSeriesImputedAndMasked) {
  Swipe s{"u", "s", "d", {sample(0, 0, 0, 0.3), sample(10, 1, 2, 0.4), sample(20, 3, 3, 0.2), sample(40, 4, 7, 0.6)}};
  const auto fv = extract_all_features(s);
  // three segments: skewness defined, kurtosis not; two accelerations
  EXPECT_TRUE(fv.is_defined(80));
  EXPECT_FALSE(fv.is_defined(81));
  EXPECT_EQ(fv[81], 0.0);
  EXPECT_FALSE(fv.is_defined(110));
  EXPECT_TRUE(fv.is_defined(22));
  for (int id = 1; id <= kFeatureCount; ++id)
    if (fv.is_defined(id)) {
      EXPECT_TRUE(std::isfinite(fv[id])) << id;
    }
}

TEST(Features, InterStrokeTimeUsesContext) {
  const auto s = testutil::line_swipe(6, 5000);
  EXPECT_FALSE(extract_all_features(s).is_defined(10));
  const auto fv = extract_all_features(s, SwipeContext{4200});
  EXPECT_TRUE(fv.is_defined(10));
  EXPECT_EQ(fv[10], 800.0);
}

TEST(Features, RequestedSubsetAndUnknownId) {
  const auto s = testutil::line_swipe(6);
  const std::vector<int> ids{6, 9};
  const auto fv = extract_features(s, ids);
  for (int id = 1; id <= kFeatureCount; ++id) EXPECT_EQ(fv.is_defined(id), id == 6 || id == 9) << id;
  const std::vector<int> bad{0};
  EXPECT_ERROR_KIND(extract_features(s, bad), ErrorKind::UnknownFeatureId);
  const std::vector<int> bad2{150};
  EXPECT_ERROR_KIND(extract_features(s, bad2), ErrorKind::UnknownFeatureId);
}

TEST(FeatureProperties, FuzzedInvariants) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = testutil::random_swipe(rng);
    const auto fv = extract_all_features(s);

    for (int id = 1; id <= kFeatureCount; ++id)
      if (fv.is_defined(id)) {
        ASSERT_TRUE(std::isfinite(fv[id]));
      }

    EXPECT_GE(fv[9], fv[6] * (1 - 1e-12));
    if (fv.is_defined(18)) {
      EXPECT_GT(fv[18], 0.0);
      EXPECT_LE(fv[18], 1.0 + 1e-12);
    }
    EXPECT_LE(fv[19], fv[20]);
    EXPECT_LE(fv[20], fv[21]);
    EXPECT_LE(fv[22], fv[23]);
    EXPECT_LE(fv[23], fv[24]);
    EXPECT_GE(fv[11], 0.0);
    EXPECT_LE(fv[11], 1.0 + 1e-12);

    // translation
    const double dx = std::round(shift(rng)), dy = std::round(shift(rng));
    Swipe moved = s;
    for (auto& p : moved.samples) {
      p.x += dx;
      p.y += dy;
    }
    const auto fm = extract_all_features(moved);
    for (int id = 1; id <= kFeatureCount; ++id) {
      ASSERT_EQ(fm.is_defined(id), fv.is_defined(id)) << "translation, feature " << id;
      const double expect = is_position_feature(id) ? fv[id] + (is_x_feature(id) ? dx : dy) : fv[id];
      EXPECT_LE(rel_err(fm[id], expect, 1e-6), 1e-7) << "translation, feature " << id;
    }

    // time shift
    Swipe later = s;
    for (auto& p : later.samples) p.t += 123456;
    const auto ft = extract_all_features(later);
    for (int id = 1; id <= kFeatureCount; ++id) {
      ASSERT_EQ(ft.is_defined(id), fv.is_defined(id));
      EXPECT_EQ(ft[id], fv[id]) << "time shift, feature " << id;
    }

    // reversal with mirrored timestamps
    Swipe rev = s;
    std::reverse(rev.samples.begin(), rev.samples.end());
    const auto t_end = s.samples.back().t;
    for (auto& p : rev.samples) p.t = t_end - p.t;
    const auto fr = extract_all_features(rev);
    EXPECT_LE(rel_err(fr[9], fv[9]), 1e-12);
    EXPECT_EQ(fr[1], fv[3]);
    EXPECT_EQ(fr[2], fv[4]);
    EXPECT_EQ(fr[3], fv[1]);
    EXPECT_EQ(fr[4], fv[2]);
  }
}

TEST(Catalog, EntriesAndFamilies) {
  const auto& c = feature_catalog();
  ASSERT_EQ(c.size(), 149u);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].id, static_cast<int>(i + 1));
  EXPECT_EQ(c[4].name, "Stroke duration");
  EXPECT_EQ(c[4].family, Family::Temporal);
  EXPECT_EQ(c[10].name, "Mean Resultant Length");
  EXPECT_ERROR_KIND(feature_def(0), ErrorKind::UnknownFeatureId);
}

TEST(Catalog, StudySubsetSizes) {
  // touch-feature counts of the twelve reproducible studies
  const std::pair<const char*, std::size_t> expected[] = {
      {"frank2013", 30},   {"li2013", 14},   {"serwadda2013", 28}, {"xu2014", 37},
      {"murmuria2015", 5}, {"antal2015", 15}, {"mahbub2016", 24},   {"shen2016", 58},
      {"filippov2018", 11}, {"syed2019", 18}, {"rocha2021", 12},    {"incel2021", 30},
  };
  for (const auto& [study, count] : expected) {
    const auto ids = study_feature_set(study);
    EXPECT_EQ(ids.size(), count) << study;
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
    EXPECT_EQ(std::set<int>(ids.begin(), ids.end()).size(), ids.size()) << study;
    for (int id : ids) {
      EXPECT_GE(id, 1);
      EXPECT_LE(id, 149);
    }
  }
  // every tagged feature of a study is part of its subset
  for (const auto& [study, count] : expected) {
    const auto ids = study_feature_set(study);
    for (int id : tagged_features(study)) EXPECT_TRUE(std::count(ids.begin(), ids.end(), id)) << study << " " << id;
  }
  EXPECT_ERROR_KIND(study_feature_set("nobody2020"), ErrorKind::UnknownStudy);
  EXPECT_ERROR_KIND(study_feature_set("xu2017"), ErrorKind::UnknownStudy);
}

TEST(Catalog, StudyTagsFromAttributionTable) {
  // entries tagged with Frank et al. in the attribution table
  EXPECT_EQ(tagged_features("frank2013").size(), 28u);
  EXPECT_EQ(tagged_features("murmuria2015").size(), 5u);
}

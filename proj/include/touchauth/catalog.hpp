#pragma once

// Static catalog of the 149 geometric swipe features and the per-study
// feature subsets used in the comparison matrix.

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "touchauth/error.hpp"

namespace touchauth {

inline constexpr int kFeatureCount = 149;

enum class Family {
  Endpoint,
  Temporal,
  Distance,
  Velocity,
  Acceleration,
  Deviation,
  Direction,
  Pressure,
  Area,
  Ldp,
  Angle,
  Shape,
  Flag,
};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Endpoint: return "endpoint";
    case Family::Temporal: return "temporal";
    case Family::Distance: return "distance";
    case Family::Velocity: return "velocity";
    case Family::Acceleration: return "acceleration";
    case Family::Deviation: return "deviation";
    case Family::Direction: return "direction";
    case Family::Pressure: return "pressure";
    case Family::Area: return "area";
    case Family::Ldp: return "ldp";
    case Family::Angle: return "angle";
    case Family::Shape: return "shape";
    case Family::Flag: return "flag";
  }
  return "?";
}

struct StudyInfo {
  std::string_view id;
  std::string_view citation;
  int year;
  int feature_count;  // touch features reproduced for the study; 0 = tag only
};

/// The twelve reproducible studies, followed by two studies that only appear as
/// feature attributions.
inline constexpr std::array<StudyInfo, 14> kStudies{{
    {"frank2013", "Frank et al.", 2013, 30},
    {"li2013", "Li et al.", 2013, 14},
    {"serwadda2013", "Serwadda et al.", 2013, 28},
    {"xu2014", "Xu et al.", 2014, 37},
    {"murmuria2015", "Murmuria et al.", 2015, 5},
    {"antal2015", "Antal et al.", 2015, 15},
    {"mahbub2016", "Mahbub et al.", 2016, 24},
    {"shen2016", "Shen et al.", 2016, 58},
    {"filippov2018", "Filippov et al.", 2018, 11},
    {"syed2019", "Syed et al.", 2019, 18},
    {"rocha2021", "Rocha et al.", 2021, 12},
    {"incel2021", "Incel et al.", 2021, 30},
    {"xu2017", "Xu et al. (2017)", 2017, 0},
    {"behavesense2019", "BehaveSense", 2019, 0},
}};

inline constexpr std::size_t kReproducibleStudies = 12;

struct FeatureDef {
  int id;
  std::string name;
  Family family;
  std::vector<std::string_view> study_tags;
};

using FeatureCatalog = std::vector<FeatureDef>;

namespace detail {

struct CatalogRow {
  int first;
  int last;
  std::array<std::string_view, 5> names;  // one per id in [first, last]
  Family family;
  std::string_view tags;  // space separated study ids
};

// clang-format off
inline constexpr CatalogRow kCatalogRows[] = {
  {1, 2, {"Start X", "Start Y"}, Family::Endpoint, "frank2013 li2013 xu2014 shen2016 antal2015 mahbub2016 syed2019 incel2021 filippov2018"},
  {3, 4, {"Stop X", "Stop Y"}, Family::Endpoint, "frank2013 xu2014 shen2016 antal2015 mahbub2016 syed2019 incel2021 filippov2018"},
  {5, 5, {"Stroke duration"}, Family::Temporal, "frank2013 li2013 serwadda2013 xu2014 shen2016 antal2015 murmuria2015 mahbub2016 syed2019 incel2021 filippov2018"},
  {6, 6, {"End-to-end distance"}, Family::Distance, "frank2013 serwadda2013 xu2014 antal2015 murmuria2015 mahbub2016 syed2019 incel2021 filippov2018"},
  {7, 7, {"Mid-stroke pressure"}, Family::Pressure, "frank2013 serwadda2013 shen2016 antal2015 syed2019 incel2021"},
  {8, 8, {"Mid-stroke area"}, Family::Area, "frank2013 serwadda2013 antal2015 incel2021"},
  {9, 9, {"Length of Trajectory"}, Family::Distance, "frank2013 li2013 serwadda2013 xu2014 shen2016 antal2015 syed2019 incel2021 filippov2018"},
  {10, 10, {"Inter-stroke time"}, Family::Temporal, "frank2013 mahbub2016 syed2019"},
  {11, 11, {"Mean Resultant Length"}, Family::Direction, "frank2013 antal2015 mahbub2016 incel2021"},
  {12, 12, {"Median acceleration at first 5 points"}, Family::Acceleration, "frank2013 mahbub2016 incel2021"},
  {13, 13, {"Median velocity at last 3 points"}, Family::Velocity, "frank2013 mahbub2016 incel2021"},
  {14, 14, {"Average velocity"}, Family::Velocity, "frank2013 serwadda2013 xu2014 shen2016 antal2015 syed2019 incel2021 filippov2018"},
  {15, 15, {"Up/Down/Left/Right"}, Family::Flag, "frank2013 antal2015 mahbub2016"},
  {16, 16, {"Direction of direct line"}, Family::Direction, "frank2013 xu2014 antal2015 murmuria2015 syed2019 incel2021"},
  {17, 17, {"Average direction"}, Family::Direction, "frank2013"},
  {18, 18, {"Ratio of direct distance to trajectory length"}, Family::Shape, "frank2013 xu2014 mahbub2016 syed2019 incel2021"},
  {19, 19, {"20% perc. velocity"}, Family::Velocity, "frank2013 mahbub2016 syed2019 incel2021"},
  {20, 20, {"50% perc. velocity"}, Family::Velocity, "frank2013 serwadda2013 shen2016 mahbub2016 syed2019 incel2021"},
  {21, 21, {"80% perc. velocity"}, Family::Velocity, "frank2013 mahbub2016 syed2019 incel2021"},
  {22, 22, {"20% perc. acceleration"}, Family::Acceleration, "frank2013 mahbub2016 incel2021"},
  {23, 23, {"50% perc. acceleration"}, Family::Acceleration, "frank2013 serwadda2013 shen2016 mahbub2016 incel2021"},
  {24, 24, {"80% perc. acceleration"}, Family::Acceleration, "frank2013 mahbub2016 incel2021"},
  {25, 25, {"20% perc. deviation"}, Family::Deviation, "frank2013 mahbub2016"},
  {26, 26, {"50% perc. deviation"}, Family::Deviation, "frank2013 shen2016 mahbub2016"},
  {27, 27, {"80% perc. deviation"}, Family::Deviation, "frank2013 mahbub2016"},
  {28, 28, {"Largest deviation"}, Family::Deviation, "frank2013 antal2015 mahbub2016"},
  {29, 29, {"Pressure at first point"}, Family::Pressure, "li2013 xu2014"},
  {30, 30, {"Area at first point"}, Family::Area, "li2013 xu2014"},
  {31, 31, {"First moving direction"}, Family::Direction, "li2013 xu2014"},
  {32, 32, {"Average moving direction"}, Family::Direction, "li2013 antal2015 mahbub2016 incel2021"},
  {33, 33, {"Average moving curvature"}, Family::Shape, "li2013"},
  {34, 34, {"Average curvature distance"}, Family::Shape, "li2013"},
  {35, 35, {"Average pressure"}, Family::Pressure, "li2013 serwadda2013 xu2014 shen2016 murmuria2015"},
  {36, 36, {"Average touch area"}, Family::Area, "li2013 serwadda2013 xu2014 murmuria2015 rocha2021 filippov2018"},
  {37, 37, {"Max-area portion"}, Family::Area, "li2013"},
  {38, 38, {"Min-pressure portion"}, Family::Pressure, "li2013"},
  {39, 39, {"Average acceleration"}, Family::Acceleration, "serwadda2013 shen2016"},
  {40, 40, {"Std. Dev. pressure"}, Family::Pressure, "serwadda2013 xu2014 shen2016"},
  {41, 41, {"Std. Dev. area"}, Family::Area, "serwadda2013 xu2014"},
  {42, 42, {"Std. Dev. velocity"}, Family::Velocity, "serwadda2013 shen2016 mahbub2016"},
  {43, 43, {"Std. Dev. acceleration"}, Family::Acceleration, "serwadda2013 shen2016"},
  {44, 44, {"First Quartile pressure"}, Family::Pressure, "serwadda2013"},
  {45, 45, {"First Quartile area"}, Family::Area, "serwadda2013"},
  {46, 46, {"First Quartile velocity"}, Family::Velocity, "serwadda2013"},
  {47, 47, {"First Quartile acceleration"}, Family::Acceleration, "serwadda2013"},
  {48, 48, {"Third Quartile pressure"}, Family::Pressure, "serwadda2013"},
  {49, 49, {"Third Quartile area"}, Family::Area, "serwadda2013"},
  {50, 50, {"Third Quartile velocity"}, Family::Velocity, "serwadda2013"},
  {51, 51, {"Third Quartile acceleration"}, Family::Acceleration, "serwadda2013"},
  {52, 55, {"Extreme point 1 X", "Extreme point 1 Y", "Extreme point 2 X", "Extreme point 2 Y"}, Family::Endpoint, "serwadda2013"},
  {56, 56, {"Last 2 points tangent"}, Family::Direction, "serwadda2013"},
  {57, 57, {"Velocity at first point"}, Family::Velocity, "xu2014"},
  {58, 60, {"Area at last point", "Pressure at last point", "Velocity at last point"}, Family::Endpoint, "xu2014"},
  {61, 61, {"Last moving direction"}, Family::Direction, "xu2014"},
  {62, 62, {"Average points distance"}, Family::Distance, "xu2014 shen2016 rocha2021"},
  {63, 63, {"Std. Dev. points distance"}, Family::Distance, "xu2014 shen2016"},
  {64, 68, {"LDP X", "LDP Y", "LDP Area", "LDP Pressure", "LDP Velocity"}, Family::Ldp, "xu2014 behavesense2019"},
  {69, 71, {"Start to LDP Latency", "Start to LDP Length", "Start to LDP Direction"}, Family::Ldp, "xu2014"},
  {72, 74, {"LDP to Stop Latency", "LDP to Stop Length", "LDP to Stop Direction"}, Family::Ldp, "xu2014"},
  {75, 75, {"Ratio distance to LDP Length"}, Family::Ldp, "xu2014"},
  {76, 76, {"Total displacement length"}, Family::Distance, "shen2016"},
  {77, 77, {"Ratio of displacement and trajectory length"}, Family::Shape, "shen2016"},
  {78, 81, {"Median of distance", "IQR of distance", "Skewness of distance", "Kurtosis of distance"}, Family::Distance, "shen2016"},
  {82, 86, {"Avg of deviation", "Std. Dev of deviation", "IQR of deviation", "Skewness of deviation", "Kurtosis of deviation"}, Family::Deviation, "shen2016"},
  {87, 91, {"Avg of pairwise angles", "Median of pairwise angles", "Std Dev of pairwise angles", "IQR of pairwise angles", "Skewness of pairwise angles"}, Family::Angle, "shen2016"},
  {92, 92, {"Kurtosis of pairwise angles"}, Family::Angle, "shen2016"},
  {93, 97, {"Avg of phase-angles", "Median of phase-angles", "Std. Dev of phase-angles", "IQR of phase-angles", "Skewness of phase-angles"}, Family::Angle, "shen2016"},
  {98, 98, {"Kurtosis of phase-angles"}, Family::Angle, "shen2016"},
  {99, 99, {"Displacement to duration ratio"}, Family::Velocity, "shen2016"},
  {100, 102, {"IQR of velocities", "Skewness of velocities", "Kurtosis of velocities"}, Family::Velocity, "shen2016"},
  {103, 107, {"Avg of angular-velocities", "Median of angular-velocities", "Std. Dev. of angular-velocities", "IQR of angular-velocities", "Skewness of angular-velocities"}, Family::Angle, "shen2016"},
  {108, 108, {"Kurtosis of angular-velocities"}, Family::Angle, "shen2016"},
  {109, 111, {"IQR of accelerations", "Skewness of accelerations", "Kurtosis of accelerations"}, Family::Acceleration, "shen2016"},
  {112, 114, {"IQR of pressures", "Skewness of pressures", "Kurtosis of pressures"}, Family::Pressure, "shen2016"},
  {115, 116, {"Min pressure", "Max pressure"}, Family::Pressure, "xu2017 rocha2021"},
  {117, 118, {"Min area", "Max area"}, Family::Area, "xu2017 rocha2021"},
  {119, 120, {"Min velocity", "Max velocity"}, Family::Velocity, "xu2017 behavesense2019"},
  {121, 124, {"Min of pressure changes", "Max of pressure changes", "Mean of pressure changes", "Median of pressure changes"}, Family::Pressure, "xu2017"},
  {125, 128, {"Min of area changes", "Max of area changes", "Mean of area changes", "Median of area changes"}, Family::Area, "xu2017"},
  {129, 130, {"X at max velocity", "Y at max velocity"}, Family::Velocity, "behavesense2019"},
  {131, 132, {"X at min velocity", "Y at min velocity"}, Family::Velocity, "behavesense2019"},
  {133, 135, {"Quadratic fit pressure x2", "Quadratic fit pressure x", "Quadratic fit pressure n"}, Family::Pressure, "rocha2021"},
  {136, 138, {"Min time duration between points", "Max time duration between points", "Avg time duration between points"}, Family::Temporal, "rocha2021"},
  {139, 140, {"Max deviation of mean X", "Max deviation of mean Y"}, Family::Deviation, "incel2021"},
  {141, 142, {"20% perc. deviation of mean X", "20% perc. deviation of mean Y"}, Family::Deviation, "incel2021"},
  {143, 144, {"Median deviation of mean X", "Median deviation of mean Y"}, Family::Deviation, "incel2021"},
  {145, 146, {"80% perc. deviation of mean X", "80% perc. deviation of mean Y"}, Family::Deviation, "incel2021"},
  {147, 148, {"Direction vector X", "Direction vector Y"}, Family::Direction, "filippov2018"},
  {149, 149, {"Horizontal/Vertical flag"}, Family::Flag, "syed2019"},
};
// clang-format on

// Features added to a study subset so that its size matches the study's
// reported touch-feature count. The attribution table lists fewer features for
// these studies (e.g. Frank et al. also used finger-orientation features, which
// have no catalog slot); the closest available catalog features stand in.
struct StudyPadding {
  std::string_view study;
  std::array<int, 2> ids;
  int count;
};
inline constexpr StudyPadding kStudyPadding[] = {
    {"frank2013", {36, 41}, 2},
    {"xu2014", {120, 0}, 1},
    {"shen2016", {36, 0}, 1},
    {"syed2019", {35, 36}, 2},
};

inline std::vector<std::string_view> split_tags(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto sp = s.find(' ');
    out.push_back(s.substr(0, sp));
    if (sp == std::string_view::npos) break;
    s.remove_prefix(sp + 1);
  }
  return out;
}

}  // namespace detail

/// Returns the 149-entry catalog, ordered by id.
inline const FeatureCatalog& feature_catalog() {
  static const FeatureCatalog catalog = [] {
    FeatureCatalog c;
    c.reserve(kFeatureCount);
    for (const auto& row : detail::kCatalogRows)
      for (int id = row.first; id <= row.last; ++id)
        c.push_back(FeatureDef{id, std::string(row.names[static_cast<std::size_t>(id - row.first)]), row.family,
                               detail::split_tags(row.tags)});
    return c;
  }();
  return catalog;
}

inline const FeatureDef& feature_def(int id) {
  if (id < 1 || id > kFeatureCount) throw Error(ErrorKind::UnknownFeatureId, std::to_string(id));
  return feature_catalog()[static_cast<std::size_t>(id - 1)];
}

inline const StudyInfo* find_study(std::string_view id) {
  for (const auto& s : kStudies)
    if (s.id == id) return &s;
  return nullptr;
}

/// Catalog ids attributed to a study (any tagged study, including tag-only ones).
inline std::vector<int> tagged_features(std::string_view study_id) {
  std::vector<int> ids;
  for (const auto& f : feature_catalog())
    if (std::find(f.study_tags.begin(), f.study_tags.end(), study_id) != f.study_tags.end()) ids.push_back(f.id);
  return ids;
}

/// Feature ids reproducing one of the twelve studies' touch feature sets.
inline std::vector<int> study_feature_set(std::string_view study_id) {
  const auto* info = find_study(study_id);
  if (!info || info->feature_count == 0) throw Error(ErrorKind::UnknownStudy, std::string(study_id));
  auto ids = tagged_features(study_id);
  for (const auto& pad : detail::kStudyPadding)
    if (pad.study == study_id)
      for (int i = 0; i < pad.count; ++i) ids.push_back(pad.ids[static_cast<std::size_t>(i)]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::vector<int> all_feature_ids() {
  std::vector<int> ids(kFeatureCount);
  for (int i = 0; i < kFeatureCount; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  return ids;
}

}  // namespace touchauth

#pragma once

// Univariate ANOVA F-scoring of features against user identity, and the
// cross-dataset vote rule that yields the ANOVA feature set.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "touchauth/catalog.hpp"
#include "touchauth/error.hpp"
#include "touchauth/matrix.hpp"

namespace touchauth {

/// Sentinel for zero within-group variance with non-zero between-group variance.
inline constexpr double kInfiniteF = std::numeric_limits<double>::infinity();

/// One-way ANOVA F statistic per column of X grouped by label.
///   F = (SSB / (k - 1)) / (SSW / (N - k))
/// SSW == 0 gives +inf when SSB > 0 and 0 when SSB == 0.
inline std::vector<double> anova_f_scores(const Matrix& X, const std::vector<int>& labels) {
  if (X.rows() == 0 || X.cols() == 0) throw Error(ErrorKind::EmptyMatrix, "no rows or columns");
  if (labels.size() != X.rows()) throw Error(ErrorKind::DimensionMismatch, "label count differs from row count");

  std::map<int, std::size_t> group_of;
  for (int y : labels) group_of.emplace(y, group_of.size());
  const std::size_t k = group_of.size();
  if (k < 2) throw Error(ErrorKind::SingleClass, "ANOVA needs at least two labels");
  const std::size_t N = X.rows();

  std::vector<std::size_t> g(N);
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    g[i] = group_of.at(labels[i]);
    count[g[i]] += 1.0;
  }

  std::vector<double> F(X.cols(), 0.0);
  std::vector<double> gsum(k);
  for (std::size_t c = 0; c < X.cols(); ++c) {
    std::fill(gsum.begin(), gsum.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      gsum[g[i]] += X(i, c);
      total += X(i, c);
    }
    const double grand = total / static_cast<double>(N);
    double ssb = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = gsum[j] / count[j] - grand;
      ssb += count[j] * d * d;
    }
    double ssw = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double d = X(i, c) - gsum[g[i]] / count[g[i]];
      ssw += d * d;
    }
    // rounding residue of a constant-within-group column
    if (ssw <= 1e-14 * (ssb + ssw)) ssw = 0.0;
    if (ssb <= 1e-14 * (ssb + ssw)) ssb = 0.0;
    if (ssw == 0.0) {
      F[c] = ssb > 0.0 ? kInfiniteF : 0.0;
    } else {
      F[c] = (ssb / static_cast<double>(k - 1)) / (ssw / static_cast<double>(N - k));
    }
  }
  return F;
}

struct SelectionConfig {
  int n_per_dataset = 125;
  int min_dataset_votes = 2;
  double max_undefined_fraction = 0.5;
};

/// One dataset's selection input: rows are swipes over all 149 features.
struct LabeledFeatures {
  std::string name;
  Matrix X;                 // N x 149, undefined entries carry their imputed value
  std::vector<int> labels;  // user index per row
  Matrix defined;           // optional N x 149 mask (1 = defined); empty = all defined
};

struct DatasetRanking {
  std::string name;
  std::vector<double> f_scores;  // per feature id - 1
  std::vector<int> excluded;     // ids dropped for being mostly undefined
  std::vector<int> top;          // top-n ids by F, ties by lower id
};

struct SelectionResult {
  std::vector<DatasetRanking> rankings;
  std::vector<int> votes;  // per feature id - 1
  std::vector<int> selected;  // ids with votes >= min_dataset_votes, ascending
};

/// Ranks features by F within each dataset, keeps the top n, and selects features
/// that appear in at least min_dataset_votes of the per-dataset lists.
inline SelectionResult select_features(const std::vector<LabeledFeatures>& datasets, const SelectionConfig& cfg) {
  if (datasets.size() < 2) throw Error(ErrorKind::Config, "feature selection needs at least two datasets");
  if (cfg.n_per_dataset < 1 || cfg.n_per_dataset > kFeatureCount)
    throw Error(ErrorKind::Config, "n_per_dataset must be in [1, 149]");
  if (cfg.min_dataset_votes < 1 || cfg.min_dataset_votes > static_cast<int>(datasets.size()))
    throw Error(ErrorKind::Config, "min_dataset_votes must be in [1, number of datasets]");

  SelectionResult res;
  res.votes.assign(kFeatureCount, 0);
  for (const auto& ds : datasets) {
    if (ds.X.cols() != static_cast<std::size_t>(kFeatureCount))
      throw Error(ErrorKind::DimensionMismatch, "selection expects 149 feature columns");
    DatasetRanking r;
    r.name = ds.name;
    r.f_scores = anova_f_scores(ds.X, ds.labels);

    std::vector<int> candidates;
    for (int id = 1; id <= kFeatureCount; ++id) {
      const auto c = static_cast<std::size_t>(id - 1);
      if (!ds.defined.empty()) {
        double undefined = 0.0;
        for (std::size_t i = 0; i < ds.defined.rows(); ++i) undefined += ds.defined(i, c) == 0.0 ? 1.0 : 0.0;
        if (undefined > cfg.max_undefined_fraction * static_cast<double>(ds.defined.rows())) {
          r.excluded.push_back(id);
          continue;
        }
      }
      candidates.push_back(id);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      return r.f_scores[static_cast<std::size_t>(a - 1)] > r.f_scores[static_cast<std::size_t>(b - 1)];
    });
    candidates.resize(std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(cfg.n_per_dataset)));
    r.top = candidates;
    for (int id : r.top) ++res.votes[static_cast<std::size_t>(id - 1)];
    res.rankings.push_back(std::move(r));
  }
  for (int id = 1; id <= kFeatureCount; ++id)
    if (res.votes[static_cast<std::size_t>(id - 1)] >= cfg.min_dataset_votes) res.selected.push_back(id);
  return res;
}

inline nlohmann::json to_json(const SelectionResult& r, const SelectionConfig& cfg) {
  nlohmann::json j;
  j["n_per_dataset"] = cfg.n_per_dataset;
  j["min_dataset_votes"] = cfg.min_dataset_votes;
  for (const auto& rk : r.rankings) {
    nlohmann::json scores = nlohmann::json::array();
    for (double f : rk.f_scores) scores.push_back(std::isinf(f) ? nlohmann::json("inf") : nlohmann::json(f));
    j["rankings"].push_back({{"dataset", rk.name}, {"f_scores", scores}, {"excluded", rk.excluded}, {"top", rk.top}});
  }
  j["votes"] = r.votes;
  j["selected"] = r.selected;
  return j;
}

}  // namespace touchauth

#pragma once

// CART decision trees (gini), random forests, and isolation forests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "touchauth/matrix.hpp"

namespace touchauth {

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: fraction of label-1 rows (or path-length correction for isolation trees)
  int size = 0;
};

inline nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& n : nodes) arr.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.size});
  return arr;
}

inline std::vector<TreeNode> nodes_from_json(const nlohmann::json& arr) {
  std::vector<TreeNode> nodes;
  for (const auto& a : arr)
    nodes.push_back(TreeNode{a[0].get<int>(), a[1].get<double>(), a[2].get<int>(), a[3].get<int>(), a[4].get<double>(),
                             a[5].get<int>()});
  return nodes;
}

struct TreeParams {
  int max_depth = -1;     // -1: unlimited
  int max_features = -1;  // -1: all features
};

/// Binary classification tree. Splits minimize weighted gini impurity; candidate
/// thresholds are midpoints between consecutive distinct values. Ties between
/// splits go to the lower feature index, then the lower threshold.
class DecisionTree {
 public:
  static DecisionTree train(const Matrix& X, const std::vector<int>& labels, std::vector<std::size_t> rows,
                            const TreeParams& params, std::mt19937_64& rng) {
    DecisionTree t;
    Builder b{X, labels, params, rng, t.nodes_};
    b.build(rows, 0);
    return t;
  }

  static DecisionTree train(const Matrix& X, const std::vector<int>& labels, const TreeParams& params,
                            std::mt19937_64& rng) {
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return train(X, labels, std::move(rows), params, rng);
  }

  double predict(std::span<const double> x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  nlohmann::json to_json() const { return nodes_to_json(nodes_); }
  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    t.nodes_ = nodes_from_json(j);
    return t;
  }

 private:
  struct Builder {
    const Matrix& X;
    const std::vector<int>& labels;
    const TreeParams& params;
    std::mt19937_64& rng;
    std::vector<TreeNode>& nodes;

    int build(std::vector<std::size_t>& rows, int depth) {
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      double pos = 0.0;
      for (auto r : rows) pos += labels[r] > 0 ? 1.0 : 0.0;
      const double n = static_cast<double>(rows.size());
      nodes[static_cast<std::size_t>(id)].value = pos / n;
      nodes[static_cast<std::size_t>(id)].size = static_cast<int>(rows.size());
      if (pos == 0.0 || pos == n || rows.size() < 2 || (params.max_depth >= 0 && depth >= params.max_depth)) return id;

      const std::size_t d = X.cols();
      std::vector<std::size_t> order(d);
      std::iota(order.begin(), order.end(), 0);
      const std::size_t mtry = params.max_features > 0 ? std::min<std::size_t>(static_cast<std::size_t>(params.max_features), d) : d;
      if (mtry < d) std::shuffle(order.begin(), order.end(), rng);

      double best_impurity = std::numeric_limits<double>::infinity();
      int best_feature = -1;
      double best_threshold = 0.0;
      std::vector<std::pair<double, int>> vals(rows.size());
      for (std::size_t k = 0; k < d; ++k) {
        // keep looking past mtry until at least one valid split exists
        if (k >= mtry && best_feature >= 0) break;
        const std::size_t f = order[k];
        for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {X(rows[i], f), labels[rows[i]] > 0 ? 1 : 0};
        std::sort(vals.begin(), vals.end());
        if (vals.front().first == vals.back().first) continue;
        double left_pos = 0.0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
          left_pos += vals[i].second;
          if (vals[i].first == vals[i + 1].first) continue;
          const double nl = static_cast<double>(i + 1), nr = n - nl;
          const double pl = left_pos / nl, pr = (pos - left_pos) / nr;
          const double impurity = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
          const double thr = 0.5 * (vals[i].first + vals[i + 1].first);
          const bool better = impurity < best_impurity - 1e-12 ||
                              (std::abs(impurity - best_impurity) <= 1e-12 &&
                               (static_cast<int>(f) < best_feature ||
                                (static_cast<int>(f) == best_feature && thr < best_threshold)));
          if (better) {
            best_impurity = impurity;
            best_feature = static_cast<int>(f);
            best_threshold = thr;
          }
        }
      }
      if (best_feature < 0) return id;

      std::vector<std::size_t> left, right;
      for (auto r : rows) (X(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(r);
      rows.clear();
      rows.shrink_to_fit();
      nodes[static_cast<std::size_t>(id)].feature = best_feature;
      nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
      const int l = build(left, depth + 1);
      const int r = build(right, depth + 1);
      nodes[static_cast<std::size_t>(id)].left = l;
      nodes[static_cast<std::size_t>(id)].right = r;
      return id;
    }
  };

  std::vector<TreeNode> nodes_;
};

struct ForestParams {
  int trees = 100;
  int max_depth = 20;
};

/// Bagged trees with sqrt(d) features per split; score = mean leaf fraction.
struct RandomForest {
  std::vector<DecisionTree> trees;

  static RandomForest train(const Matrix& X, const std::vector<int>& labels, const ForestParams& params,
                            std::uint64_t seed) {
    RandomForest f;
    std::mt19937_64 rng(seed);
    const std::size_t n = X.rows();
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.max_features = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(X.cols()))));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int t = 0; t < params.trees; ++t) {
      std::vector<std::size_t> rows(n);
      for (auto& r : rows) r = pick(rng);
      f.trees.push_back(DecisionTree::train(X, labels, std::move(rows), tp, rng));
    }
    return f;
  }

  double score(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees) arr.push_back(t.to_json());
    return {{"trees", arr}};
  }
  static RandomForest from_json(const nlohmann::json& j) {
    RandomForest f;
    for (const auto& t : j.at("trees")) f.trees.push_back(DecisionTree::from_json(t));
    return f;
  }
};

// ---------------------------------------------------------------------------
// Isolation forest

/// Average path length of an unsuccessful BST search over n points.
inline double average_path_length(double n) {
  if (n <= 1.0) return 0.0;
  if (n <= 2.0) return 1.0;
  constexpr double euler = 0.5772156649015329;
  return 2.0 * (std::log(n - 1.0) + euler) - 2.0 * (n - 1.0) / n;
}

struct IsolationForestParams {
  int estimators = 100;
  int max_samples = 256;
};

/// Isolation forest; anomaly(x) = 2^(-E[h(x)] / c(psi)), higher = more anomalous.
struct IsolationForest {
  std::vector<std::vector<TreeNode>> trees;
  double psi = 0.0;

  static IsolationForest train(const Matrix& X, const IsolationForestParams& params, std::uint64_t seed) {
    IsolationForest f;
    std::mt19937_64 rng(seed);
    const std::size_t n = X.rows();
    const std::size_t sample = std::min<std::size_t>(static_cast<std::size_t>(params.max_samples), n);
    f.psi = static_cast<double>(sample);
    const int height_limit = static_cast<int>(std::ceil(std::log2(std::max<double>(2.0, f.psi))));
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int t = 0; t < params.estimators; ++t) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<std::size_t> rows(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sample));
      std::vector<TreeNode> nodes;
      grow(X, rows, 0, height_limit, rng, nodes);
      f.trees.push_back(std::move(nodes));
    }
    return f;
  }

  double path_length(const std::vector<TreeNode>& nodes, std::span<const double> x) const {
    int i = 0;
    double depth = 0.0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& nd = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
      depth += 1.0;
    }
    return depth + nodes[static_cast<std::size_t>(i)].value;
  }

  double anomaly(std::span<const double> x) const {
    double h = 0.0;
    for (const auto& t : trees) h += path_length(t, x);
    h /= static_cast<double>(trees.size());
    const double c = average_path_length(psi);
    return c > 0.0 ? std::pow(2.0, -h / c) : 0.5;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees) arr.push_back(nodes_to_json(t));
    return {{"trees", arr}, {"psi", psi}};
  }
  static IsolationForest from_json(const nlohmann::json& j) {
    IsolationForest f;
    for (const auto& t : j.at("trees")) f.trees.push_back(nodes_from_json(t));
    f.psi = j.at("psi").get<double>();
    return f;
  }

 private:
  static int grow(const Matrix& X, const std::vector<std::size_t>& rows, int depth, int limit, std::mt19937_64& rng,
                  std::vector<TreeNode>& nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes.back().size = static_cast<int>(rows.size());
    auto make_leaf = [&] {
      nodes[static_cast<std::size_t>(id)].value = average_path_length(static_cast<double>(rows.size()));
      return id;
    };
    if (depth >= limit || rows.size() <= 1) return make_leaf();

    std::vector<std::size_t> splittable;
    std::vector<std::pair<double, double>> range(X.cols());
    for (std::size_t f = 0; f < X.cols(); ++f) {
      double lo = X(rows[0], f), hi = lo;
      for (auto r : rows) lo = std::min(lo, X(r, f)), hi = std::max(hi, X(r, f));
      range[f] = {lo, hi};
      if (hi > lo) splittable.push_back(f);
    }
    if (splittable.empty()) return make_leaf();
    const std::size_t f = splittable[std::uniform_int_distribution<std::size_t>(0, splittable.size() - 1)(rng)];
    const double thr = std::uniform_real_distribution<double>(range[f].first, range[f].second)(rng);
    std::vector<std::size_t> left, right;
    for (auto r : rows) (X(r, f) < thr ? left : right).push_back(r);
    if (left.empty() || right.empty()) return make_leaf();
    nodes[static_cast<std::size_t>(id)].feature = static_cast<int>(f);
    nodes[static_cast<std::size_t>(id)].threshold = thr;
    const int l = grow(X, left, depth + 1, limit, rng, nodes);
    const int r = grow(X, right, depth + 1, limit, rng, nodes);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace touchauth

#pragma once

// Logistic regression, Gaussian naive Bayes and k-nearest neighbours.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "touchauth/adam.hpp"
#include "touchauth/matrix.hpp"

namespace touchauth {

namespace detail {

/// Limited-memory BFGS with a backtracking Armijo line search. f writes the
/// gradient into its second argument and returns the objective.
inline std::vector<double> lbfgs_minimize(const std::function<double(std::span<const double>, std::span<double>)>& f,
                                          std::vector<double> x, int max_iter, double gtol = 1e-4,
                                          std::size_t memory = 10) {
  const std::size_t n = x.size();
  std::vector<double> g(n), g_new(n), x_new(n), dir(n);
  double fx = f(x, g);
  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };
  for (int it = 0; it < max_iter && inf_norm(g) > gtol; ++it) {
    // two-loop recursion
    dir = g;
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * std::inner_product(S[k].begin(), S[k].end(), dir.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * Y[k][i];
    }
    if (!S.empty()) {
      const double yy = std::inner_product(Y.back().begin(), Y.back().end(), Y.back().begin(), 0.0);
      const double gamma = 1.0 / (rho.back() * yy);
      for (auto& d : dir) d *= gamma;
    }
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * std::inner_product(Y[k].begin(), Y[k].end(), dir.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) dir[i] += S[k][i] * (alpha[k] - beta);
    }
    for (auto& d : dir) d = -d;
    double slope = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    if (slope >= 0.0) {  // not a descent direction: restart from steepest descent
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    }
    double step = 1.0;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-12) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const bool stalled = std::abs(fx - f_new) <= 1e-12 * std::max({1.0, std::abs(fx), std::abs(f_new)});
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (stalled) break;
  }
  return x;
}

}  // namespace detail

struct LogisticRegressionParams {
  double C = 1.0;
  int max_iter = 1000;
};

/// L2-regularized logistic regression: minimizes 0.5*|w|^2 + C * sum log-loss, with
/// an unpenalized intercept.
struct LogisticRegression {
  std::vector<double> weights;
  double intercept = 0.0;

  static LogisticRegression train(const Matrix& X, const std::vector<int>& labels,
                                  const LogisticRegressionParams& params) {
    const std::size_t n = X.rows(), d = X.cols();
    auto objective = [&](std::span<const double> p, std::span<double> g) {
      double f = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        f += 0.5 * p[j] * p[j];
        g[j] = p[j];
      }
      g[d] = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto x = X.row(i);
        double z = p[d];
        for (std::size_t j = 0; j < d; ++j) z += p[j] * x[j];
        const double t = labels[i] > 0 ? 1.0 : 0.0;
        f += params.C * bce_with_logit(z, t);
        const double r = params.C * (sigmoid(z) - t);
        for (std::size_t j = 0; j < d; ++j) g[j] += r * x[j];
        g[d] += r;
      }
      return f;
    };
    auto p = detail::lbfgs_minimize(objective, std::vector<double>(d + 1, 0.0), params.max_iter);
    LogisticRegression m;
    m.intercept = p[d];
    p.pop_back();
    m.weights = std::move(p);
    return m;
  }

  double score(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
    return sigmoid(z);
  }

  nlohmann::json to_json() const { return {{"weights", weights}, {"intercept", intercept}}; }
  static LogisticRegression from_json(const nlohmann::json& j) {
    return {j.at("weights").get<std::vector<double>>(), j.at("intercept").get<double>()};
  }
};

struct GaussianNbParams {
  double var_smoothing = 1e-9;
};

/// Gaussian naive Bayes over labels {0, 1}; score = posterior of label 1.
struct GaussianNb {
  std::vector<double> mean[2];
  std::vector<double> var[2];
  double log_prior[2] = {0.0, 0.0};

  static GaussianNb train(const Matrix& X, const std::vector<int>& labels, const GaussianNbParams& params) {
    const std::size_t n = X.rows(), d = X.cols();
    GaussianNb m;
    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) mu += X(i, j);
      mu /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += (X(i, j) - mu) * (X(i, j) - mu);
      max_var = std::max(max_var, v / static_cast<double>(n));
    }
    const double eps = params.var_smoothing * max_var;
    for (int c = 0; c < 2; ++c) {
      m.mean[c].assign(d, 0.0);
      m.var[c].assign(d, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if ((labels[i] > 0 ? 1 : 0) == c) {
          ++count;
          for (std::size_t j = 0; j < d; ++j) m.mean[c][j] += X(i, j);
        }
      if (count == 0) {
        m.log_prior[c] = -std::numeric_limits<double>::infinity();
        m.var[c].assign(d, 1.0);
        continue;
      }
      for (auto& v : m.mean[c]) v /= static_cast<double>(count);
      for (std::size_t i = 0; i < n; ++i)
        if ((labels[i] > 0 ? 1 : 0) == c)
          for (std::size_t j = 0; j < d; ++j) m.var[c][j] += (X(i, j) - m.mean[c][j]) * (X(i, j) - m.mean[c][j]);
      for (auto& v : m.var[c]) v = v / static_cast<double>(count) + eps;
      if (eps == 0.0)
        for (auto& v : m.var[c]) v = std::max(v, 1e-300);
      m.log_prior[c] = std::log(static_cast<double>(count) / static_cast<double>(n));
    }
    return m;
  }

  double joint_log_likelihood(int c, std::span<const double> x) const {
    double ll = log_prior[c];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - mean[c][j];
      ll -= 0.5 * std::log(2.0 * std::numbers::pi * var[c][j]) + 0.5 * diff * diff / var[c][j];
    }
    return ll;
  }

  double score(std::span<const double> x) const {
    const double l0 = joint_log_likelihood(0, x), l1 = joint_log_likelihood(1, x);
    if (std::isinf(l0) && l0 < 0) return 1.0;
    if (std::isinf(l1) && l1 < 0) return 0.0;
    return sigmoid(l1 - l0);
  }

  nlohmann::json to_json() const {
    return {{"mean", {mean[0], mean[1]}}, {"var", {var[0], var[1]}},
            {"log_prior", {log_prior[0] == -std::numeric_limits<double>::infinity() ? nlohmann::json("-inf") : nlohmann::json(log_prior[0]),
                           log_prior[1] == -std::numeric_limits<double>::infinity() ? nlohmann::json("-inf") : nlohmann::json(log_prior[1])}}};
  }
  static GaussianNb from_json(const nlohmann::json& j) {
    GaussianNb m;
    for (int c = 0; c < 2; ++c) {
      m.mean[c] = j.at("mean").at(c).get<std::vector<double>>();
      m.var[c] = j.at("var").at(c).get<std::vector<double>>();
      const auto& lp = j.at("log_prior").at(c);
      m.log_prior[c] = lp.is_string() ? -std::numeric_limits<double>::infinity() : lp.get<double>();
    }
    return m;
  }
};

struct KnnParams {
  int k = 18;
};

/// k-nearest neighbours (Euclidean); score = fraction of label-1 neighbours. Equal
/// distances are ordered by training index.
struct Knn {
  Matrix points;
  std::vector<int> labels;
  int k = 18;

  static Knn train(const Matrix& X, const std::vector<int>& y, const KnnParams& params) {
    return Knn{X, y, params.k};
  }

  double score(std::span<const double> x) const {
    const std::size_t n = points.rows();
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, k)), n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = points.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) s += (p[j] - x[j]) * (p[j] - x[j]);
      dist[i] = {s, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    double pos = 0.0;
    for (std::size_t i = 0; i < kk; ++i) pos += labels[dist[i].second] > 0 ? 1.0 : 0.0;
    return pos / static_cast<double>(kk);
  }

  nlohmann::json to_json() const {
    return {{"rows", points.rows()}, {"cols", points.cols()}, {"data", points.data()}, {"labels", labels}, {"k", k}};
  }
  static Knn from_json(const nlohmann::json& j) {
    Knn m;
    m.points = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.points.data() = j.at("data").get<std::vector<double>>();
    m.labels = j.at("labels").get<std::vector<int>>();
    m.k = j.at("k").get<int>();
    return m;
  }
};

}  // namespace touchauth

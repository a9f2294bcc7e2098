#pragma once

// RBF-kernel support vector machines trained with SMO (second-order working set
// selection): C-SVC with Platt-scaled probabilities and the one-class nu-SVM.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "touchauth/matrix.hpp"

namespace touchauth {

/// "scale" RBF coefficient: 1 / (n_features * Var(X)) over all entries.
inline double scale_gamma(const Matrix& X) {
  const auto& d = X.data();
  if (d.empty()) return 1.0;
  const double m = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double var = ss / static_cast<double>(d.size());
  return var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
}

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

namespace detail {

/// Minimizes 0.5 a'Qa + p'a subject to y'a = const, 0 <= a <= C, where
/// Q_ij = y_i y_j K_ij. Returns alphas and rho.
class SmoSolver {
 public:
  struct Result {
    std::vector<double> alpha;
    double rho = 0.0;
    long iterations = 0;
  };

  SmoSolver(const Matrix& X, std::vector<double> y, double gamma) : X_(X), y_(std::move(y)), gamma_(gamma) {
    const std::size_t n = X_.rows();
    if (n <= kFullCacheRows) {
      Q_.resize(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          const double q = y_[i] * y_[j] * rbf(X_.row(i), X_.row(j), gamma_);
          Q_[i * n + j] = q;
          Q_[j * n + i] = q;
        }
    }
    diag_.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag_[i] = 1.0;  // K(x, x) = 1 for RBF
  }

  Result solve(std::vector<double> p, std::vector<double> alpha, double C, double eps = 1e-3) {
    const std::size_t n = X_.rows();
    std::vector<double> G = p;
    std::vector<double> qi(n), qj(n);
    for (std::size_t i = 0; i < n; ++i)
      if (alpha[i] != 0.0) {
        row(i, qi);
        for (std::size_t k = 0; k < n; ++k) G[k] += alpha[i] * qi[k];
      }

    auto upper = [&](std::size_t i) { return alpha[i] >= C; };
    auto lower = [&](std::size_t i) { return alpha[i] <= 0.0; };
    const long max_iter = std::max<long>(10'000'000, 100 * static_cast<long>(n));
    constexpr double tau = 1e-12;

    Result res;
    for (; res.iterations < max_iter; ++res.iterations) {
      // working set selection
      double gmax = -std::numeric_limits<double>::infinity();
      double gmax2 = -std::numeric_limits<double>::infinity();
      long i_sel = -1;
      for (std::size_t t = 0; t < n; ++t) {
        if (y_[t] > 0) {
          if (!upper(t) && -G[t] >= gmax) gmax = -G[t], i_sel = static_cast<long>(t);
        } else {
          if (!lower(t) && G[t] >= gmax) gmax = G[t], i_sel = static_cast<long>(t);
        }
      }
      if (i_sel < 0) break;
      const auto i = static_cast<std::size_t>(i_sel);
      row(i, qi);
      long j_sel = -1;
      double obj_min = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        if (y_[t] > 0) {
          if (lower(t)) continue;
          const double grad_diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (grad_diff > 0) {
            double quad = diag_[i] + diag_[t] - 2.0 * y_[i] * qi[t];
            const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
            if (obj <= obj_min) j_sel = static_cast<long>(t), obj_min = obj;
          }
        } else {
          if (upper(t)) continue;
          const double grad_diff = gmax - G[t];
          gmax2 = std::max(gmax2, -G[t]);
          if (grad_diff > 0) {
            double quad = diag_[i] + diag_[t] + 2.0 * y_[i] * qi[t];
            const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : tau);
            if (obj <= obj_min) j_sel = static_cast<long>(t), obj_min = obj;
          }
        }
      }
      if (gmax + gmax2 < eps || j_sel < 0) break;
      const auto j = static_cast<std::size_t>(j_sel);
      row(j, qj);

      const double old_ai = alpha[i], old_aj = alpha[j];
      if (y_[i] != y_[j]) {
        double quad = diag_[i] + diag_[j] + 2.0 * qi[j];
        if (quad <= 0) quad = tau;
        const double delta = (-G[i] - G[j]) / quad;
        const double diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if (diff > 0) {
          if (alpha[j] < 0) alpha[j] = 0, alpha[i] = diff;
        } else {
          if (alpha[i] < 0) alpha[i] = 0, alpha[j] = -diff;
        }
        if (diff > 0) {
          if (alpha[i] > C) alpha[i] = C, alpha[j] = C - diff;
        } else {
          if (alpha[j] > C) alpha[j] = C, alpha[i] = C + diff;
        }
      } else {
        double quad = diag_[i] + diag_[j] - 2.0 * qi[j];
        if (quad <= 0) quad = tau;
        const double delta = (G[i] - G[j]) / quad;
        const double sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if (sum > C) {
          if (alpha[i] > C) alpha[i] = C, alpha[j] = sum - C;
        } else {
          if (alpha[j] < 0) alpha[j] = 0, alpha[i] = sum;
        }
        if (sum > C) {
          if (alpha[j] > C) alpha[j] = C, alpha[i] = sum - C;
        } else {
          if (alpha[i] < 0) alpha[i] = 0, alpha[j] = sum;
        }
      }
      const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
      for (std::size_t k = 0; k < n; ++k) G[k] += qi[k] * dai + qj[k] * daj;
    }

    // rho
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yg = y_[i] * G[i];
      if (upper(i)) {
        if (y_[i] < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (lower(i)) {
        if (y_[i] > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    res.alpha = std::move(alpha);
    return res;
  }

 private:
  static constexpr std::size_t kFullCacheRows = 4000;

  void row(std::size_t i, std::vector<double>& out) const {
    const std::size_t n = X_.rows();
    if (!Q_.empty()) {
      std::copy_n(Q_.begin() + static_cast<std::ptrdiff_t>(i * n), n, out.begin());
      return;
    }
    for (std::size_t k = 0; k < n; ++k) out[k] = y_[i] * y_[k] * rbf(X_.row(i), X_.row(k), gamma_);
  }

  const Matrix& X_;
  std::vector<double> y_;
  double gamma_;
  std::vector<double> Q_;
  std::vector<double> diag_;
};

/// Fits P(y = 1 | f) = 1 / (1 + exp(A f + B)) by Newton's method with backtracking.
inline std::pair<double, double> fit_platt(const std::vector<double>& dec, const std::vector<int>& labels) {
  double prior1 = 0, prior0 = 0;
  for (int l : labels) (l > 0 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] > 0 ? hi : lo;

  auto objective = [&](double A, double B) {
    double f = 0.0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      const double z = dec[i] * A + B;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(A, B);
  constexpr double min_step = 1e-10, sigma = 1e-12, eps = 1e-5;
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < dec.size(); ++i) {
      const double z = dec[i] * A + B;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= min_step) {
      const double nA = A + step * dA, nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA, B = nB, fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  return {A, B};
}

inline double platt_probability(double dec, double A, double B) {
  const double z = dec * A + B;
  return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
}

}  // namespace detail

/// Support vectors with coefficients; decision(x) = sum coef_i K(sv_i, x) - rho.
struct RbfExpansion {
  Matrix support;
  std::vector<double> coef;
  double rho = 0.0;
  double gamma = 1.0;

  double decision(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < support.rows(); ++i) s += coef[i] * rbf(support.row(i), x, gamma);
    return s - rho;
  }

  nlohmann::json to_json() const {
    return {{"support", support.data()}, {"rows", support.rows()}, {"cols", support.cols()},
            {"coef", coef},              {"rho", rho},             {"gamma", gamma}};
  }
  static RbfExpansion from_json(const nlohmann::json& j) {
    RbfExpansion e;
    e.support = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    e.support.data() = j.at("support").get<std::vector<double>>();
    e.coef = j.at("coef").get<std::vector<double>>();
    e.rho = j.at("rho").get<double>();
    e.gamma = j.at("gamma").get<double>();
    return e;
  }
};

namespace detail {
inline RbfExpansion expansion_from(const Matrix& X, const std::vector<double>& y, const SmoSolver::Result& r,
                                   double gamma) {
  RbfExpansion e;
  e.gamma = gamma;
  e.rho = r.rho;
  for (std::size_t i = 0; i < X.rows(); ++i)
    if (r.alpha[i] > 0.0) {
      e.support.append_row(X.row(i));
      e.coef.push_back(r.alpha[i] * y[i]);
    }
  if (e.support.rows() == 0) e.support = Matrix(0, X.cols());
  return e;
}

inline RbfExpansion train_csvc(const Matrix& X, const std::vector<int>& labels, double C, double gamma) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] > 0 ? 1.0 : -1.0;
  SmoSolver solver(X, y, gamma);
  auto res = solver.solve(std::vector<double>(X.rows(), -1.0), std::vector<double>(X.rows(), 0.0), C);
  return expansion_from(X, y, res, gamma);
}
}  // namespace detail

struct SvmParams {
  double C = 1.0;
  double gamma = 0.0;  // <= 0 means "scale"
  int platt_folds = 3;
};

/// Binary RBF SVM whose score is the Platt-calibrated probability of label 1.
struct BinarySvm {
  RbfExpansion expansion;
  double platt_a = 0.0;
  double platt_b = 0.0;

  static BinarySvm train(const Matrix& X, const std::vector<int>& labels, const SvmParams& params,
                         std::uint64_t seed) {
    const double gamma = params.gamma > 0 ? params.gamma : scale_gamma(X);
    BinarySvm m;
    m.expansion = detail::train_csvc(X, labels, params.C, gamma);

    // Platt scaling on out-of-fold decision values
    const std::size_t n = X.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> dec(n, 0.0);
    const int folds = std::max(2, std::min<int>(params.platt_folds, static_cast<int>(n)));
    for (int f = 0; f < folds; ++f) {
      const std::size_t begin = static_cast<std::size_t>(f) * n / static_cast<std::size_t>(folds);
      const std::size_t end = static_cast<std::size_t>(f + 1) * n / static_cast<std::size_t>(folds);
      Matrix train_x;
      std::vector<int> train_y;
      for (std::size_t k = 0; k < n; ++k) {
        if (k >= begin && k < end) continue;
        train_x.append_row(X.row(perm[k]));
        train_y.push_back(labels[perm[k]]);
      }
      const bool has_pos = std::count(train_y.begin(), train_y.end(), 1) > 0;
      const bool has_neg = std::count(train_y.begin(), train_y.end(), 0) > 0;
      if (has_pos && has_neg) {
        const auto fold_model = detail::train_csvc(train_x, train_y, params.C, gamma);
        for (std::size_t k = begin; k < end; ++k) dec[perm[k]] = fold_model.decision(X.row(perm[k]));
      } else {
        for (std::size_t k = begin; k < end; ++k) dec[perm[k]] = has_pos ? 1.0 : -1.0;
      }
    }
    std::tie(m.platt_a, m.platt_b) = detail::fit_platt(dec, labels);
    return m;
  }

  double score(std::span<const double> x) const {
    return detail::platt_probability(expansion.decision(x), platt_a, platt_b);
  }

  nlohmann::json to_json() const { return {{"expansion", expansion.to_json()}, {"platt_a", platt_a}, {"platt_b", platt_b}}; }
  static BinarySvm from_json(const nlohmann::json& j) {
    return BinarySvm{RbfExpansion::from_json(j.at("expansion")), j.at("platt_a").get<double>(),
                     j.at("platt_b").get<double>()};
  }
};

struct OneClassSvmParams {
  double nu = 0.5;
  double gamma = 0.0;  // <= 0 means "scale"
};

/// One-class nu-SVM; raw decision values (higher = more typical of training data).
struct OneClassSvm {
  RbfExpansion expansion;

  static OneClassSvm train(const Matrix& X, const OneClassSvmParams& params) {
    const std::size_t n = X.rows();
    const double gamma = params.gamma > 0 ? params.gamma : scale_gamma(X);
    std::vector<double> y(n, 1.0);
    std::vector<double> alpha(n, 0.0);
    const double total = params.nu * static_cast<double>(n);
    const auto whole = static_cast<std::size_t>(total);
    for (std::size_t i = 0; i < whole && i < n; ++i) alpha[i] = 1.0;
    if (whole < n) alpha[whole] = total - static_cast<double>(whole);
    detail::SmoSolver solver(X, y, gamma);
    auto res = solver.solve(std::vector<double>(n, 0.0), std::move(alpha), 1.0);
    return OneClassSvm{detail::expansion_from(X, y, res, gamma)};
  }

  double decision(std::span<const double> x) const { return expansion.decision(x); }

  nlohmann::json to_json() const { return {{"expansion", expansion.to_json()}}; }
  static OneClassSvm from_json(const nlohmann::json& j) { return OneClassSvm{RbfExpansion::from_json(j.at("expansion"))}; }
};

}  // namespace touchauth

#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "touchauth/matrix.hpp"

namespace touchauth {

/// Per-column z-scoring fitted on training data. NaN marks a missing entry: it is
/// ignored when fitting and mapped to 0 (the training mean) when transforming.
/// Zero-variance columns transform to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 0 for zero-variance columns

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    s.mean.assign(X.cols(), 0.0);
    s.scale.assign(X.cols(), 0.0);
    for (std::size_t c = 0; c < X.cols(); ++c) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < X.rows(); ++r)
        if (!std::isnan(X(r, c))) {
          sum += X(r, c);
          ++n;
        }
      if (n == 0) continue;
      const double m = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < X.rows(); ++r)
        if (!std::isnan(X(r, c))) ss += (X(r, c) - m) * (X(r, c) - m);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      s.mean[c] = m;
      s.scale[c] = sd > 1e-12 * (1.0 + std::abs(m)) ? sd : 0.0;
    }
    return s;
  }

  Matrix transform(const Matrix& X) const {
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r)
      for (std::size_t c = 0; c < X.cols(); ++c) {
        const double v = X(r, c);
        out(r, c) = (std::isnan(v) || scale[c] == 0.0) ? 0.0 : (v - mean[c]) / scale[c];
      }
    return out;
  }

  nlohmann::json to_json() const { return {{"mean", mean}, {"scale", scale}}; }
  static Standardizer from_json(const nlohmann::json& j) {
    return Standardizer{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
  }
};

}  // namespace touchauth

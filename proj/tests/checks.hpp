#pragma once

// Check routines shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "touchauth/touchauth.hpp"

namespace checks {

using namespace touchauth;

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Random-walk swipe with jittered timing.
inline Swipe random_swipe(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(4, 40), gap(1, 30);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = len(rng);
  Swipe s{"u", "s", "dev", {}};
  std::int64_t t = 5000;
  double x = 1080 * u(rng), y = 1920 * u(rng);
  const double drift_x = 20 * z(rng), drift_y = 20 * z(rng), scale = 1 + 30 * u(rng);
  for (int i = 0; i < n; ++i) {
    auto ph = i == 0 ? Phase::Down : i + 1 == n ? Phase::Up : Phase::Move;
    s.samples.push_back(TouchSample{t, x, y, 0.2 + 0.6 * u(rng), 0.05 + 0.1 * u(rng), ph});
    t += gap(rng) + (i == 0 ? 30 : 0);
    x += drift_x + scale * z(rng);
    y += drift_y + scale * z(rng);
  }
  return s;
}

// Features that move with a translation of the whole swipe (start, end, LDP and
// centroid coordinates).
inline bool is_position_feature(int id) {
  static const std::set<int> ids{1, 2, 3, 4, 52, 53, 54, 55, 64, 65, 129, 130, 131, 132};
  return ids.count(id) > 0;
}

inline bool is_x_feature(int id) {
  static const std::set<int> ids{1, 3, 52, 54, 64, 129, 131};
  return ids.count(id) > 0;
}

/// Golden-file samples are [t, x, y, pressure, area] rows.
inline Swipe swipe_from_json(const nlohmann::json& samples) {
  Swipe s{"u", "s", "dev", {}};
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = samples[i];
    s.samples.push_back(TouchSample{r[0].get<std::int64_t>(), r[1].get<double>(), r[2].get<double>(),
                                    r[3].get<double>(), r[4].get<double>(),
                                    i == 0 ? Phase::Down : i + 1 == n ? Phase::Up : Phase::Move});
  }
  return s;
}

struct GoldenResult {
  std::size_t cases = 0;
  std::size_t fuzzed = 0;
  std::size_t mask_mismatches = 0;
  double max_rel = 0.0;
};

inline GoldenResult feature_golden_comparison(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  const auto golden = nlohmann::json::parse(in);
  GoldenResult r;
  for (const auto& c : golden) {
    SwipeContext ctx;
    if (!c["previous_end"].is_null()) ctx.previous_swipe_end = c["previous_end"].get<std::int64_t>();
    const auto fv = extract_all_features(swipe_from_json(c["samples"]), ctx);
    for (int id = 1; id <= kFeatureCount; ++id) {
      const auto i = static_cast<std::size_t>(id - 1);
      if (fv.is_defined(id) != c["defined"][i].get<bool>()) ++r.mask_mismatches;
      r.max_rel = std::max(r.max_rel, rel_err(fv[id], c["values"][i].get<double>()));
    }
    ++r.cases;
    if (c["name"].get<std::string>().rfind("fuzz", 0) == 0) ++r.fuzzed;
  }
  return r;
}

// Central differences with step h; the relative error uses a floor so that
// near-zero gradients (where rounding noise of order eps*|loss|/h dominates)
// are compared in absolute terms.
inline constexpr double kFdStep = 1e-6;
inline constexpr double kGradFloor = 1e-5;

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

inline double grad_rel(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

/// Frozen 5-sample batch, dropout off, batch statistics. Checks every parameter
/// when max_params is 0, otherwise an evenly spread subset.
inline GradCheck mlp_gradient_check(std::size_t inputs, const MlpParams& params, std::uint64_t seed,
                                    std::size_t max_params = 0) {
  Mlp net(inputs, params, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix X(5, inputs);
  for (auto& v : X.data()) v = z(rng);
  const std::vector<double> y{1, 0, 1, 1, 0};

  std::vector<double> grad(net.parameter_count()), scratch(net.parameter_count());
  net.loss_and_gradient(X, y, grad);
  auto w = net.parameters();
  const std::size_t n = w.size();
  const std::size_t stride = max_params == 0 || max_params >= n ? 1 : n / max_params;
  GradCheck r;
  for (std::size_t i = 0; i < n; i += stride) {
    const double keep = w[i];
    w[i] = keep + kFdStep;
    const double up = net.loss_and_gradient(X, y, scratch);
    w[i] = keep - kFdStep;
    const double down = net.loss_and_gradient(X, y, scratch);
    w[i] = keep;
    const double e = grad_rel(grad[i], (up - down) / (2 * kFdStep));
    if (e > r.max_rel) {
      r.max_rel = e;
      r.worst_index = i;
    }
    ++r.checked;
  }
  return r;
}

/// Frozen batch of 4 score sequences; every LSTM parameter is checked.
inline GradCheck lstm_gradient_check(int hidden, std::size_t window, std::uint64_t seed) {
  LstmStacker net(hidden, seed);
  std::mt19937_64 rng(seed + 7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> batch(4, std::vector<double>(window));
  for (auto& s : batch)
    for (auto& v : s) v = u(rng);
  const std::vector<double> y{1, 0, 0, 1};
  std::vector<double> grad(net.parameters().size()), scratch(grad.size());
  net.loss_and_gradient(batch, y, grad);
  auto w = net.parameters();
  GradCheck r;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + kFdStep;
    const double up = net.loss_and_gradient(batch, y, scratch);
    w[i] = keep - kFdStep;
    const double down = net.loss_and_gradient(batch, y, scratch);
    w[i] = keep;
    const double e = grad_rel(grad[i], (up - down) / (2 * kFdStep));
    if (e > r.max_rel) {
      r.max_rel = e;
      r.worst_index = i;
    }
    ++r.checked;
  }
  return r;
}

/// Exhaustive threshold sweep: every distinct score plus one threshold above all
/// of them, rates by direct counting, EER where FAR - FRR reaches or crosses zero.
struct SweepPoint {
  double far, frr;
};

inline std::vector<SweepPoint> sweep_oracle(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  std::set<double> thresholds(genuine.begin(), genuine.end());
  thresholds.insert(impostor.begin(), impostor.end());
  std::vector<double> t(thresholds.begin(), thresholds.end());
  t.push_back(t.back() + 1.0);
  std::vector<SweepPoint> out;
  for (double th : t) {
    std::size_t accepted = 0, rejected = 0;
    for (double s : impostor) accepted += s >= th ? 1 : 0;
    for (double s : genuine) rejected += s < th ? 1 : 0;
    out.push_back({static_cast<double>(accepted) / static_cast<double>(impostor.size()),
                   static_cast<double>(rejected) / static_cast<double>(genuine.size())});
  }
  return out;
}

inline double oracle_eer(const std::vector<SweepPoint>& sweep) {
  for (const auto& p : sweep)
    if (p.far == p.frr) return p.far;
  for (std::size_t k = 0; k + 1 < sweep.size(); ++k) {
    const double d0 = sweep[k].far - sweep[k].frr, d1 = sweep[k + 1].far - sweep[k + 1].frr;
    if (d0 > 0 && d1 < 0) {
      // FAR and FRR are both linear in the interpolation parameter; solve FAR = FRR
      const double a = d0 / (d0 - d1);
      return (1 - a) * sweep[k].far + a * sweep[k + 1].far;
    }
  }
  return std::nan("");
}

/// Fuzzed score set: mixes continuous scores with coarse ties.
inline std::pair<std::vector<double>, std::vector<double>> fuzzed_scores(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 60), mode(0, 2);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> sep(-1.0, 3.0);
  const int m = mode(rng);
  const double shift = sep(rng);
  auto draw = [&](double mu) {
    double v = 1.0 / (1.0 + std::exp(-(mu + z(rng))));
    if (m == 1) v = std::round(v * 10) / 10;  // heavy ties
    if (m == 2) v = std::round(v * 100) / 100;
    return v;
  };
  std::vector<double> g(static_cast<std::size_t>(size(rng))), i(static_cast<std::size_t>(size(rng)));
  for (auto& v : g) v = draw(shift);
  for (auto& v : i) v = draw(0.0);
  return {g, i};
}

struct RocOracleResult {
  std::size_t sets = 0;
  double max_diff = 0.0;
};

inline RocOracleResult roc_oracle_comparison(std::uint64_t seed, int sets) {
  std::mt19937_64 rng(seed);
  RocOracleResult r;
  for (int k = 0; k < sets; ++k) {
    const auto [g, i] = fuzzed_scores(rng);
    const auto curve = compute_roc(g, i);
    const auto sweep = sweep_oracle(g, i);
    if (curve.size() != sweep.size()) {
      r.max_diff = std::numeric_limits<double>::infinity();
      return r;
    }
    for (std::size_t p = 0; p < curve.size(); ++p)
      r.max_diff = std::max({r.max_diff, std::abs(curve[p].far - sweep[p].far), std::abs(curve[p].frr - sweep[p].frr)});
    const double diff = std::abs(compute_eer(curve).eer - oracle_eer(sweep));
    r.max_diff = std::isnan(diff) ? std::numeric_limits<double>::infinity() : std::max(r.max_diff, diff);
    ++r.sets;
  }
  return r;
}

/// Hand-formula ANOVA in long double, group by group.
inline double hand_anova_f(const std::vector<double>& col, const std::vector<int>& labels) {
  std::map<int, std::vector<long double>> groups;
  for (std::size_t i = 0; i < col.size(); ++i) groups[labels[i]].push_back(col[i]);
  long double total = 0;
  for (double v : col) total += v;
  const long double grand = total / static_cast<long double>(col.size());
  long double ssb = 0, ssw = 0;
  for (const auto& [_, g] : groups) {
    long double m = 0;
    for (auto v : g) m += v;
    m /= static_cast<long double>(g.size());
    ssb += static_cast<long double>(g.size()) * (m - grand) * (m - grand);
    for (auto v : g) ssw += (v - m) * (v - m);
  }
  const auto k = static_cast<long double>(groups.size()), n = static_cast<long double>(col.size());
  return static_cast<double>((ssb / (k - 1)) / (ssw / (n - k)));
}

/// 50 fuzzed group fixtures, 6 columns each; returns the worst relative error.
inline double anova_oracle_comparison(std::uint64_t seed, int fixtures) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> groups(2, 6), size(2, 12);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 1000.0);
  double worst = 0.0;
  for (int f = 0; f < fixtures; ++f) {
    const int k = groups(rng);
    std::vector<int> labels;
    for (int g = 0; g < k; ++g)
      for (int i = size(rng); i > 0; --i) labels.push_back(g * 7 + 3);
    std::shuffle(labels.begin(), labels.end(), rng);
    const std::size_t cols = 6;
    Matrix X(labels.size(), cols);
    std::vector<std::vector<double>> columns(cols, std::vector<double>(labels.size()));
    for (std::size_t c = 0; c < cols; ++c) {
      const double s = scale(rng), shift = 100 * z(rng), effect = std::abs(z(rng));
      for (std::size_t i = 0; i < labels.size(); ++i) {
        columns[c][i] = shift + s * (effect * (labels[i] % 5) + z(rng));
        X(i, c) = columns[c][i];
      }
    }
    const auto F = anova_f_scores(X, labels);
    for (std::size_t c = 0; c < cols; ++c) {
      const double want = hand_anova_f(columns[c], labels);
      worst = std::max(worst, std::abs(F[c] - want) / std::max(std::abs(want), 1e-300));
    }
  }
  return worst;
}

}  // namespace checks

#pragma once

// Feed-forward binary classifier:
//   [Dense -> BatchNorm -> ReLU -> Dropout] per hidden layer (no dropout after the
//   last hidden layer) -> Dense -> sigmoid, trained with Adam on binary
//   cross-entropy.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "touchauth/adam.hpp"
#include "touchauth/matrix.hpp"

namespace touchauth {

struct MlpParams {
  std::vector<int> hidden{150, 150, 75};
  double dropout = 0.3;
  bool batch_norm = true;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-3;
  int epochs = 50;
  int batch_size = 20;
  AdamConfig adam{};
};

class Mlp {
 public:
  Mlp() = default;

  /// He-style uniform fan-in initialization: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
  Mlp(std::size_t inputs, MlpParams params, std::uint64_t seed) : params_(std::move(params)), inputs_(inputs) {
    layout();
    std::mt19937_64 rng(seed);
    std::size_t fan_in = inputs_;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (std::size_t i = 0; i < L.out * L.in; ++i) weights_[L.w + i] = u(rng);
      if (L.has_bn)
        for (std::size_t i = 0; i < L.out; ++i) weights_[L.gamma + i] = 1.0;
      fan_in = L.out;
    }
  }

  std::size_t parameter_count() const { return weights_.size(); }
  std::span<double> parameters() { return weights_; }
  std::span<const double> parameters() const { return weights_; }

  /// Mean BCE over the batch in training mode (batch statistics). Writes dLoss/dparam
  /// into grad. Dropout is applied only when rng is given.
  double loss_and_gradient(const Matrix& X, std::span<const double> targets, std::span<double> grad,
                           std::mt19937_64* rng = nullptr, bool update_running = false) {
    const std::size_t B = X.rows();
    std::fill(grad.begin(), grad.end(), 0.0);
    struct Cache {
      Matrix input, xhat, pre_relu, mask;
      std::vector<double> invstd;
    };
    std::vector<Cache> cache(layers_.size());
    Matrix a = X;
    const std::size_t H = layers_.size() - 1;

    for (std::size_t l = 0; l < H; ++l) {
      const auto& L = layers_[l];
      auto& c = cache[l];
      c.input = a;
      Matrix z = dense(a, L);
      if (L.has_bn) {
        c.xhat = Matrix(B, L.out);
        c.invstd.assign(L.out, 0.0);
        for (std::size_t j = 0; j < L.out; ++j) {
          double mu = 0.0;
          for (std::size_t b = 0; b < B; ++b) mu += z(b, j);
          mu /= static_cast<double>(B);
          double var = 0.0;
          for (std::size_t b = 0; b < B; ++b) var += (z(b, j) - mu) * (z(b, j) - mu);
          var /= static_cast<double>(B);
          const double inv = 1.0 / std::sqrt(var + params_.bn_epsilon);
          c.invstd[j] = inv;
          for (std::size_t b = 0; b < B; ++b) {
            c.xhat(b, j) = (z(b, j) - mu) * inv;
            z(b, j) = weights_[L.gamma + j] * c.xhat(b, j) + weights_[L.beta + j];
          }
          if (update_running) {
            running_mean_[l][j] = params_.bn_momentum * running_mean_[l][j] + (1.0 - params_.bn_momentum) * mu;
            running_var_[l][j] = params_.bn_momentum * running_var_[l][j] + (1.0 - params_.bn_momentum) * var;
          }
        }
      }
      c.pre_relu = z;
      for (auto& v : z.data()) v = std::max(v, 0.0);
      const bool drop = rng && params_.dropout > 0.0 && l + 1 < H;
      if (drop) {
        c.mask = Matrix(B, L.out);
        std::bernoulli_distribution keep(1.0 - params_.dropout);
        const double s = 1.0 / (1.0 - params_.dropout);
        for (std::size_t i = 0; i < z.data().size(); ++i) {
          c.mask.data()[i] = keep(*rng) ? s : 0.0;
          z.data()[i] *= c.mask.data()[i];
        }
      }
      a = std::move(z);
    }

    const auto& out = layers_[H];
    cache[H].input = a;
    const Matrix logits = dense(a, out);
    double loss = 0.0;
    Matrix delta(B, 1);
    for (std::size_t b = 0; b < B; ++b) {
      loss += bce_with_logit(logits(b, 0), targets[b]);
      delta(b, 0) = (sigmoid(logits(b, 0)) - targets[b]) / static_cast<double>(B);
    }
    loss /= static_cast<double>(B);

    // backward
    Matrix d = dense_backward(cache[H].input, delta, out, grad);
    for (std::size_t l = H; l-- > 0;) {
      const auto& L = layers_[l];
      const auto& c = cache[l];
      if (!c.mask.empty())
        for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] *= c.mask.data()[i];
      for (std::size_t i = 0; i < d.data().size(); ++i)
        if (c.pre_relu.data()[i] <= 0.0) d.data()[i] = 0.0;
      if (L.has_bn) {
        for (std::size_t j = 0; j < L.out; ++j) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            sum_dy += d(b, j);
            sum_dy_xhat += d(b, j) * c.xhat(b, j);
          }
          grad[L.gamma + j] += sum_dy_xhat;
          grad[L.beta + j] += sum_dy;
          const double g = weights_[L.gamma + j];
          const double k = g * c.invstd[j] / static_cast<double>(B);
          for (std::size_t b = 0; b < B; ++b)
            d(b, j) = k * (static_cast<double>(B) * d(b, j) - sum_dy - c.xhat(b, j) * sum_dy_xhat);
        }
      }
      d = dense_backward(c.input, d, L, grad);
    }
    return loss;
  }

  /// Inference-mode probabilities (running statistics, no dropout).
  std::vector<double> predict(const Matrix& X) const {
    Matrix a = X;
    const std::size_t H = layers_.size() - 1;
    for (std::size_t l = 0; l < H; ++l) {
      const auto& L = layers_[l];
      Matrix z = dense(a, L);
      if (L.has_bn)
        for (std::size_t j = 0; j < L.out; ++j) {
          const double inv = 1.0 / std::sqrt(running_var_[l][j] + params_.bn_epsilon);
          for (std::size_t b = 0; b < z.rows(); ++b)
            z(b, j) = weights_[L.gamma + j] * (z(b, j) - running_mean_[l][j]) * inv + weights_[L.beta + j];
        }
      for (auto& v : z.data()) v = std::max(v, 0.0);
      a = std::move(z);
    }
    const Matrix logits = dense(a, layers_[H]);
    std::vector<double> p(X.rows());
    for (std::size_t b = 0; b < X.rows(); ++b) p[b] = sigmoid(logits(b, 0));
    return p;
  }

  /// Minibatch training; batch order reshuffled every epoch from the seed, last
  /// batch may be partial.
  static Mlp train(const Matrix& X, const std::vector<int>& labels, const MlpParams& params, std::uint64_t seed) {
    Mlp net(X.cols(), params, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    Adam opt(net.parameter_count(), params.adam);
    std::vector<double> grad(net.parameter_count());
    std::vector<std::size_t> order(X.rows());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t bs = static_cast<std::size_t>(std::max(1, params.batch_size));
    for (int e = 0; e < params.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t end = std::min(order.size(), start + bs);
        Matrix xb(end - start, X.cols());
        std::vector<double> yb(end - start);
        for (std::size_t i = start; i < end; ++i) {
          std::copy(X.row(order[i]).begin(), X.row(order[i]).end(), xb.row(i - start).begin());
          yb[i - start] = labels[order[i]] > 0 ? 1.0 : 0.0;
        }
        net.loss_and_gradient(xb, yb, grad, &rng, true);
        opt.step(net.weights_, grad);
      }
    }
    return net;
  }

  nlohmann::json to_json() const {
    return {{"inputs", inputs_},
            {"hidden", params_.hidden},
            {"batch_norm", params_.batch_norm},
            {"bn_epsilon", params_.bn_epsilon},
            {"weights", weights_},
            {"running_mean", running_mean_},
            {"running_var", running_var_}};
  }
  static Mlp from_json(const nlohmann::json& j) {
    Mlp m;
    m.inputs_ = j.at("inputs").get<std::size_t>();
    m.params_.hidden = j.at("hidden").get<std::vector<int>>();
    m.params_.batch_norm = j.at("batch_norm").get<bool>();
    m.params_.bn_epsilon = j.at("bn_epsilon").get<double>();
    m.layout();
    m.weights_ = j.at("weights").get<std::vector<double>>();
    m.running_mean_ = j.at("running_mean").get<std::vector<std::vector<double>>>();
    m.running_var_ = j.at("running_var").get<std::vector<std::vector<double>>>();
    return m;
  }

 private:
  struct Layer {
    std::size_t in = 0, out = 0;
    std::size_t w = 0, b = 0;  // offsets into weights_
    bool has_bn = false;
    std::size_t gamma = 0, beta = 0;
  };

  void layout() {
    layers_.clear();
    std::size_t off = 0, in = inputs_;
    auto add = [&](std::size_t out, bool bn) {
      Layer L;
      L.in = in;
      L.out = out;
      L.w = off;
      off += in * out;
      L.b = off;
      off += out;
      L.has_bn = bn;
      if (bn) {
        L.gamma = off;
        off += out;
        L.beta = off;
        off += out;
      }
      layers_.push_back(L);
      in = out;
    };
    for (int h : params_.hidden) add(static_cast<std::size_t>(h), params_.batch_norm);
    add(1, false);
    weights_.assign(off, 0.0);
    running_mean_.clear();
    running_var_.clear();
    for (int h : params_.hidden) {
      running_mean_.emplace_back(static_cast<std::size_t>(h), 0.0);
      running_var_.emplace_back(static_cast<std::size_t>(h), 1.0);
    }
  }

  Matrix dense(const Matrix& a, const Layer& L) const {
    Matrix z(a.rows(), L.out);
    for (std::size_t b = 0; b < a.rows(); ++b) {
      const auto x = a.row(b);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double* w = &weights_[L.w + o * L.in];
        double s = weights_[L.b + o];
        for (std::size_t i = 0; i < L.in; ++i) s += w[i] * x[i];
        z(b, o) = s;
      }
    }
    return z;
  }

  // Accumulates weight/bias gradients and returns d(loss)/d(input).
  Matrix dense_backward(const Matrix& input, const Matrix& dz, const Layer& L, std::span<double> grad) const {
    Matrix da(input.rows(), L.in);
    for (std::size_t b = 0; b < input.rows(); ++b) {
      const auto x = input.row(b);
      auto dx = da.row(b);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double g = dz(b, o);
        if (g == 0.0) continue;
        grad[L.b + o] += g;
        double* gw = &grad[L.w + o * L.in];
        const double* w = &weights_[L.w + o * L.in];
        for (std::size_t i = 0; i < L.in; ++i) {
          gw[i] += g * x[i];
          dx[i] += g * w[i];
        }
      }
    }
    return da;
  }

  MlpParams params_;
  std::size_t inputs_ = 0;
  std::vector<Layer> layers_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> running_mean_, running_var_;
};

}  // namespace touchauth

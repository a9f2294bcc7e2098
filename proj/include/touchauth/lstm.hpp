#pragma once

// Single-layer LSTM over a window of scalar scores, final hidden state through one
// sigmoid unit. Used as the stacking aggregator.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "touchauth/adam.hpp"
#include "touchauth/error.hpp"

namespace touchauth {

struct StackerSpec {
  int hidden = 20;
  int epochs = 50;
  int batch_size = 20;
  AdamConfig adam{};
  std::uint64_t seed = 0;
};

class LstmStacker {
 public:
  LstmStacker() = default;

  /// Glorot-uniform kernels, zero biases except the forget gate (1).
  LstmStacker(int hidden, std::uint64_t seed) : H_(static_cast<std::size_t>(hidden)) {
    params_.assign(offset_v() + H_ + 1, 0.0);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t off, std::size_t count, double fan_in, double fan_out) {
      const double lim = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-lim, lim);
      for (std::size_t i = 0; i < count; ++i) params_[off + i] = u(rng);
    };
    const double h = static_cast<double>(H_);
    fill(offset_wx(), 4 * H_, 1.0, 4.0 * h);
    fill(offset_wh(), 4 * H_ * H_, h, 4.0 * h);
    fill(offset_v(), H_, h, 1.0);
    for (std::size_t j = 0; j < H_; ++j) params_[offset_b() + H_ + j] = 1.0;
  }

  std::size_t hidden() const { return H_; }
  std::size_t window() const { return window_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  double predict(std::span<const double> seq) const {
    if (window_ != 0 && seq.size() != window_)
      throw Error(ErrorKind::LengthMismatch,
                  "stacker expects " + std::to_string(window_) + " scores, got " + std::to_string(seq.size()));
    return sigmoid(forward(seq, nullptr));
  }

  /// Mean BCE over the batch; writes the gradient into grad.
  double loss_and_gradient(const std::vector<std::vector<double>>& batch, std::span<const double> targets,
                           std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    const double B = static_cast<double>(batch.size());
    Trace tr;
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const double z = forward(batch[s], &tr);
      loss += bce_with_logit(z, targets[s]);
      backward(batch[s], tr, (sigmoid(z) - targets[s]) / B, grad);
    }
    return loss / B;
  }

  static LstmStacker train(const StackerSpec& spec, const std::vector<std::vector<double>>& sequences,
                           const std::vector<int>& labels) {
    if (sequences.empty()) throw Error(ErrorKind::InconsistentSequenceLength, "no training sequences");
    if (labels.size() != sequences.size()) throw Error(ErrorKind::LengthMismatch, "label count differs");
    const std::size_t w = sequences.front().size();
    for (const auto& s : sequences)
      if (s.size() != w || w == 0) throw Error(ErrorKind::InconsistentSequenceLength, "sequences differ in length");

    LstmStacker net(spec.hidden, spec.seed);
    std::mt19937_64 rng(spec.seed ^ 0x5bd1e995ULL);
    Adam opt(net.params_.size(), spec.adam);
    std::vector<double> grad(net.params_.size());
    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t bs = static_cast<std::size_t>(std::max(1, spec.batch_size));
    for (int e = 0; e < spec.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t end = std::min(order.size(), start + bs);
        std::vector<std::vector<double>> xb;
        std::vector<double> yb;
        for (std::size_t i = start; i < end; ++i) {
          xb.push_back(sequences[order[i]]);
          yb.push_back(labels[order[i]] > 0 ? 1.0 : 0.0);
        }
        net.loss_and_gradient(xb, yb, grad);
        opt.step(net.params_, grad);
      }
    }
    net.window_ = w;
    return net;
  }

  nlohmann::json to_json() const { return {{"hidden", H_}, {"window", window_}, {"params", params_}}; }
  static LstmStacker from_json(const nlohmann::json& j) {
    LstmStacker m;
    m.H_ = j.at("hidden").get<std::size_t>();
    m.window_ = j.at("window").get<std::size_t>();
    m.params_ = j.at("params").get<std::vector<double>>();
    return m;
  }

 private:
  // Gate order within each 4H block: input, forget, cell candidate, output.
  std::size_t offset_wx() const { return 0; }
  std::size_t offset_wh() const { return 4 * H_; }
  std::size_t offset_b() const { return 4 * H_ + 4 * H_ * H_; }
  std::size_t offset_v() const { return offset_b() + 4 * H_; }
  std::size_t offset_c() const { return offset_v() + H_; }

  struct Trace {
    // per timestep, each of size H (h and c include the initial zero state at index 0)
    std::vector<std::vector<double>> h, c, i, f, g, o;
  };

  double forward(std::span<const double> seq, Trace* tr) const {
    const std::size_t T = seq.size();
    std::vector<double> h(H_, 0.0), c(H_, 0.0), a(4 * H_);
    if (tr) {
      for (auto* v : {&tr->h, &tr->c}) v->assign(1, std::vector<double>(H_, 0.0));
      for (auto* v : {&tr->i, &tr->f, &tr->g, &tr->o}) v->clear();
    }
    const double* wx = &params_[offset_wx()];
    const double* wh = &params_[offset_wh()];
    const double* b = &params_[offset_b()];
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t r = 0; r < 4 * H_; ++r) {
        double s = b[r] + wx[r] * seq[t];
        const double* row = wh + r * H_;
        for (std::size_t k = 0; k < H_; ++k) s += row[k] * h[k];
        a[r] = s;
      }
      std::vector<double> gi(H_), gf(H_), gg(H_), go(H_);
      for (std::size_t j = 0; j < H_; ++j) {
        gi[j] = sigmoid(a[j]);
        gf[j] = sigmoid(a[H_ + j]);
        gg[j] = std::tanh(a[2 * H_ + j]);
        go[j] = sigmoid(a[3 * H_ + j]);
        c[j] = gf[j] * c[j] + gi[j] * gg[j];
        h[j] = go[j] * std::tanh(c[j]);
      }
      if (tr) {
        tr->i.push_back(std::move(gi));
        tr->f.push_back(std::move(gf));
        tr->g.push_back(std::move(gg));
        tr->o.push_back(std::move(go));
        tr->h.push_back(h);
        tr->c.push_back(c);
      }
    }
    double z = params_[offset_c()];
    for (std::size_t j = 0; j < H_; ++j) z += params_[offset_v() + j] * h[j];
    return z;
  }

  void backward(std::span<const double> seq, const Trace& tr, double dz, std::span<double> grad) const {
    const std::size_t T = seq.size();
    std::vector<double> dh(H_), dc(H_, 0.0), da(4 * H_);
    grad[offset_c()] += dz;
    for (std::size_t j = 0; j < H_; ++j) {
      grad[offset_v() + j] += dz * tr.h[T][j];
      dh[j] = dz * params_[offset_v() + j];
    }
    const double* wh = &params_[offset_wh()];
    for (std::size_t t = T; t-- > 0;) {
      const auto &gi = tr.i[t], &gf = tr.f[t], &gg = tr.g[t], &go = tr.o[t];
      const auto& c_now = tr.c[t + 1];
      const auto& c_prev = tr.c[t];
      const auto& h_prev = tr.h[t];
      for (std::size_t j = 0; j < H_; ++j) {
        const double tc = std::tanh(c_now[j]);
        const double d_o = dh[j] * tc;
        dc[j] += dh[j] * go[j] * (1.0 - tc * tc);
        const double d_i = dc[j] * gg[j];
        const double d_g = dc[j] * gi[j];
        const double d_f = dc[j] * c_prev[j];
        da[j] = d_i * gi[j] * (1.0 - gi[j]);
        da[H_ + j] = d_f * gf[j] * (1.0 - gf[j]);
        da[2 * H_ + j] = d_g * (1.0 - gg[j] * gg[j]);
        da[3 * H_ + j] = d_o * go[j] * (1.0 - go[j]);
        dc[j] *= gf[j];
      }
      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t r = 0; r < 4 * H_; ++r) {
        grad[offset_wx() + r] += da[r] * seq[t];
        grad[offset_b() + r] += da[r];
        double* gw = &grad[offset_wh() + r * H_];
        const double* row = wh + r * H_;
        for (std::size_t k = 0; k < H_; ++k) {
          gw[k] += da[r] * h_prev[k];
          dh[k] += da[r] * row[k];
        }
      }
    }
  }

  std::size_t H_ = 0;
  std::size_t window_ = 0;  // 0 until trained
  std::vector<double> params_;
};

}  // namespace touchauth

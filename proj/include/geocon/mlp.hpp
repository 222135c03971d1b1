// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geocon/matrix.hpp"
#include "geocon/rng.hpp"
#include "geocon/serial.hpp"

namespace geocon {

enum class Activation : std::uint8_t { relu = 0, silu = 1, tanh = 2, identity = 3 };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::silu: return "silu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::silu: return z / (1.0 + std::exp(-z));
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

inline double activate_deriv(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::silu: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 + z * (1.0 - s));
    }
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

// Shape-matched parameter gradient buffers for one Mlp.
struct MlpGrads {
  std::vector<DenseMatrix> w;  // per layer, out x in
  std::vector<DenseMatrix> b;  // per layer, 1 x out

  void set_zero() {
    for (auto& m : w) m.set_zero();
    for (auto& m : b) m.set_zero();
  }

  void add(const MlpGrads& o) {
    for (std::size_t l = 0; l < w.size(); ++l) {
      w[l].add_scaled(o.w[l], 1.0);
      b[l].add_scaled(o.b[l], 1.0);
    }
  }
};

// Forward-pass activations kept for the backward pass. a[0] is the input,
// a[l] the post-activation of layer l, z[l-1] the pre-activation.
struct MlpCache {
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> z;
  bool valid = false;
};

// Small fully connected network with analytic forward/backward. Layer l
// maps widths[l] -> widths[l+1]; one activation per layer.
class Mlp {
 public:
  Mlp() = default;

  Mlp(std::vector<std::size_t> widths, std::vector<Activation> activations)
      : widths_(std::move(widths)), activations_(std::move(activations)) {
    require(widths_.size() >= 2, "Mlp: need at least input and output widths");
    require(activations_.size() == widths_.size() - 1,
            "Mlp: one activation per layer required");
    for (std::size_t w : widths_) require(w > 0, "Mlp: zero layer width");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      weights_.emplace_back(widths_[l + 1], widths_[l]);
      biases_.emplace_back(1, widths_[l + 1]);
    }
    grads_ = make_grads();
  }

  // widths = {in, hidden..., out}; hidden layers share one activation.
  static Mlp make(const std::vector<std::size_t>& widths,
                  Activation hidden = Activation::silu,
                  Activation output = Activation::identity) {
    std::vector<Activation> acts(widths.size() - 1, hidden);
    acts.back() = output;
    return Mlp(std::vector<std::size_t>(widths), std::move(acts));
  }

  std::size_t in_dim() const { return widths_.front(); }
  std::size_t out_dim() const { return widths_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return activations_; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += weights_[l].size() + biases_[l].size();
    return n;
  }

  std::vector<DenseMatrix>& weights() { return weights_; }
  const std::vector<DenseMatrix>& weights() const { return weights_; }
  std::vector<DenseMatrix>& biases() { return biases_; }
  const std::vector<DenseMatrix>& biases() const { return biases_; }

  // Glorot-style uniform init in +-sqrt(6/(fan_in+fan_out)).
  void init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double fan_in = static_cast<double>(widths_[l]);
      const double fan_out = static_cast<double>(widths_[l + 1]);
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      DenseMatrix& w = weights_[l];
      for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
      biases_[l].set_zero();
    }
  }

  MlpGrads make_grads() const {
    MlpGrads g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      g.w.emplace_back(weights_[l].rows(), weights_[l].cols());
      g.b.emplace_back(1, biases_[l].cols());
    }
    return g;
  }

  void forward(std::span<const double> input, MlpCache& cache,
               std::vector<double>& out) const {
    if (input.size() != in_dim())
      throw config_error("Mlp::forward: input length " + std::to_string(input.size()) +
                         " != " + std::to_string(in_dim()));
    const std::size_t nl = weights_.size();
    cache.a.resize(nl + 1);
    cache.z.resize(nl);
    cache.a[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < nl; ++l) {
      const std::size_t out_w = widths_[l + 1];
      cache.z[l].resize(out_w);
      weights_[l].matvec(cache.a[l].data(), cache.z[l].data());
      const double* bias = biases_[l].data();
      const Activation act = activations_[l];
      cache.a[l + 1].resize(out_w);
      for (std::size_t i = 0; i < out_w; ++i) {
        cache.z[l][i] += bias[i];
        cache.a[l + 1][i] = activate(act, cache.z[l][i]);
      }
    }
    out = cache.a[nl];
    for (double v : out)
      if (!std::isfinite(v)) throw numeric_error("Mlp::forward: non-finite output");
    cache.valid = true;
  }

  std::vector<double> forward(std::span<const double> input) const {
    MlpCache scratch;
    std::vector<double> out;
    forward(input, scratch, out);
    return out;
  }

  // Stateful variant backing the backward() convenience path.
  std::vector<double> forward_cached(std::span<const double> input) {
    std::vector<double> out;
    forward(input, cache_, out);
    return out;
  }

  // Accumulates parameter gradients into `grads`, returns d(loss)/d(input).
  void backward(const MlpCache& cache, std::span<const double> upstream,
                MlpGrads& grads, std::vector<double>& input_grad) const {
    if (!cache.valid) throw config_error("Mlp::backward: no cached forward pass");
    if (upstream.size() != out_dim())
      throw config_error("Mlp::backward: upstream length mismatch");
    const std::size_t nl = weights_.size();
    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> next;
    for (std::size_t l = nl; l-- > 0;) {
      const Activation act = activations_[l];
      const std::vector<double>& z = cache.z[l];
      for (std::size_t i = 0; i < delta.size(); ++i)
        delta[i] *= activate_deriv(act, z[i]);
      grads.w[l].add_outer(delta.data(), cache.a[l].data());
      double* gb = grads.b[l].data();
      for (std::size_t i = 0; i < delta.size(); ++i) gb[i] += delta[i];
      next.assign(widths_[l], 0.0);
      weights_[l].add_matvec_transposed(delta.data(), next.data());
      delta.swap(next);
    }
    input_grad = std::move(delta);
  }

  // Convenience path over the internal cache and gradient buffers.
  std::vector<double> backward(std::span<const double> upstream) {
    std::vector<double> input_grad;
    backward(cache_, upstream, grads_, input_grad);
    return input_grad;
  }

  MlpGrads& grads() { return grads_; }
  const MlpGrads& grads() const { return grads_; }
  void zero_grad() { grads_.set_zero(); }

  void save(std::ostream& os) const {
    serial::write_u64(os, widths_.size());
    for (std::size_t w : widths_) serial::write_u64(os, w);
    for (Activation a : activations_) serial::write_u8(os, static_cast<std::uint8_t>(a));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      serial::write_doubles(os, weights_[l].data(), weights_[l].size());
      serial::write_doubles(os, biases_[l].data(), biases_[l].size());
    }
  }

  void load(std::istream& is) {
    const std::size_t nw = serial::read_u64(is);
    std::vector<std::size_t> widths(nw);
    for (auto& w : widths) w = serial::read_u64(is);
    std::vector<Activation> acts(nw - 1);
    for (auto& a : acts) a = static_cast<Activation>(serial::read_u8(is));
    *this = Mlp(std::move(widths), std::move(acts));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      serial::read_doubles(is, weights_[l].data(), weights_[l].size());
      serial::read_doubles(is, biases_[l].data(), biases_[l].size());
    }
  }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Activation> activations_;
  std::vector<DenseMatrix> weights_;
  std::vector<DenseMatrix> biases_;
  MlpGrads grads_;
  MlpCache cache_;
};

}  // namespace geocon

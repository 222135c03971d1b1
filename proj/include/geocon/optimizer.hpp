// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "geocon/matrix.hpp"
#include "geocon/serial.hpp"

namespace geocon {

enum class OptimizerKind : std::uint8_t { sgd = 0, adam = 1 };

inline const char* optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

// A parameter tensor paired with its gradient buffer. Slot order is fixed
// by whoever assembles the set and must be stable across save/load.
struct ParamRef {
  DenseMatrix* value = nullptr;
  DenseMatrix* grad = nullptr;
};

using ParamSet = std::vector<ParamRef>;

// First-order optimizer: plain SGD or adaptive-moment mode (default).
// step() consumes and zeroes the gradient buffers.
class Optimizer {
 public:
  Optimizer() = default;

  explicit Optimizer(OptimizerKind kind, double learning_rate)
      : kind_(kind), lr_(learning_rate) {
    require(lr_ > 0.0, "Optimizer: learning rate must be positive");
  }

  // Fresh binding: zeroed moments, step counter reset.
  void bind(const ParamSet& params) {
    m_.clear();
    v_.clear();
    step_count_ = 0;
    attach(params);
  }

  // Re-associate existing state (e.g. loaded from a checkpoint) with a
  // parameter set; moment shapes must match.
  void attach(const ParamSet& params) {
    bound_sizes_.clear();
    for (const ParamRef& p : params) bound_sizes_.push_back(p.value->size());
    if (kind_ == OptimizerKind::adam) {
      if (m_.empty()) {
        for (const ParamRef& p : params) {
          m_.emplace_back(p.value->size(), 0.0);
          v_.emplace_back(p.value->size(), 0.0);
        }
      } else {
        if (m_.size() != params.size())
          throw config_error("Optimizer::attach: slot count mismatch");
        for (std::size_t s = 0; s < params.size(); ++s)
          if (m_[s].size() != params[s].value->size())
            throw config_error("Optimizer::attach: slot shape mismatch");
      }
    }
  }

  void step(const ParamSet& params) {
    check_bound(params);
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    for (std::size_t s = 0; s < params.size(); ++s) {
      DenseMatrix& w = *params[s].value;
      DenseMatrix& g = *params[s].grad;
      if (kind_ == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < w.size(); ++i)
          w.data()[i] -= lr_ * g.data()[i];
      } else {
        std::vector<double>& m = m_[s];
        std::vector<double>& v = v_[s];
        const double bc1 = 1.0 - std::pow(beta1_, t);
        const double bc2 = 1.0 - std::pow(beta2_, t);
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double gi = g.data()[i];
          m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
          v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
          const double mhat = m[i] / bc1;
          const double vhat = v[i] / bc2;
          w.data()[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
      }
      w.check_finite("optimizer step");
      g.set_zero();
    }
  }

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  std::uint64_t step_count() const { return step_count_; }

  void save(std::ostream& os) const {
    serial::write_u8(os, static_cast<std::uint8_t>(kind_));
    serial::write_double(os, lr_);
    serial::write_u64(os, step_count_);
    serial::write_u64(os, m_.size());
    for (std::size_t s = 0; s < m_.size(); ++s) {
      serial::write_u64(os, m_[s].size());
      serial::write_doubles(os, m_[s].data(), m_[s].size());
      serial::write_doubles(os, v_[s].data(), v_[s].size());
    }
  }

  // Call bind() on the target ParamSet first; load checks slot shapes.
  void load(std::istream& is) {
    kind_ = static_cast<OptimizerKind>(serial::read_u8(is));
    lr_ = serial::read_double(is);
    step_count_ = serial::read_u64(is);
    const std::uint64_t slots = serial::read_u64(is);
    m_.assign(slots, {});
    v_.assign(slots, {});
    for (std::size_t s = 0; s < slots; ++s) {
      const std::uint64_t n = serial::read_u64(is);
      m_[s].resize(n);
      v_[s].resize(n);
      serial::read_doubles(is, m_[s].data(), n);
      serial::read_doubles(is, v_[s].data(), n);
    }
    if (kind_ == OptimizerKind::adam && !bound_sizes_.empty()) {
      if (m_.size() != bound_sizes_.size())
        throw data_error("Optimizer::load: slot count mismatch");
      for (std::size_t s = 0; s < m_.size(); ++s)
        if (m_[s].size() != bound_sizes_[s])
          throw data_error("Optimizer::load: slot shape mismatch");
    }
  }

 private:
  void check_bound(const ParamSet& params) const {
    if (params.size() != bound_sizes_.size())
      throw config_error("Optimizer: step on unbound parameter set");
    for (std::size_t s = 0; s < params.size(); ++s)
      if (params[s].value->size() != bound_sizes_[s] ||
          params[s].grad->size() != bound_sizes_[s])
        throw config_error("Optimizer: parameter/gradient shape mismatch");
  }

  OptimizerKind kind_ = OptimizerKind::adam;
  double lr_ = 0.01;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::vector<std::size_t> bound_sizes_;
};

}  // namespace geocon

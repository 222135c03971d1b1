// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "geocon/common.hpp"
#include "geocon/contrast.hpp"
#include "geocon/optimizer.hpp"
#include "geocon/serial.hpp"

namespace geocon {

// Pretraining hyperparameters. File form is flat `key = value` text with
// `#` comments; CLI flags override file values.
struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::size_t negatives = 0;       // 0 => in-batch (batch_size - 1)
  bool global_negatives = false;   // global uniform sampling ablation
  LossKind loss = LossKind::chem;
  double gamma = 1.0;
  double tau = 0.0;
  double tau_plus = 0.1;
  double q = 0.0;                  // 0 => Q = N
  double chem_prefactor = 1.0;
  double lambda = 0.1;
  std::size_t knn = 8;
  double cut_radius = 10.0;
  std::size_t depth = 3;
  std::size_t hidden_dim = 64;
  std::size_t message_dim = 64;
  std::size_t phi_hidden = 64;
  std::size_t phi_depth = 2;
  std::size_t fp_radius = 2;
  std::size_t fp_width = 2048;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t checkpoint_interval = 0;  // 0 => final checkpoint only
  bool symmetric = false;               // add the ligand->pocket direction

  void validate() const {
    require(batch_size >= 2, "config: batch_size must be >= 2");
    require(negatives == 0 || global_negatives,
            "config: a fixed negative count requires global_negatives");
    require(gamma > 0.0 && std::isfinite(gamma), "config: gamma must be positive");
    require(tau >= 0.0 && tau < 1.0, "config: tau must lie in [0,1)");
    require(tau_plus >= 0.0 && tau_plus < 1.0, "config: tau_plus must lie in [0,1)");
    require(q >= 0.0 && std::isfinite(q), "config: q must be non-negative");
    require(std::isfinite(chem_prefactor) && chem_prefactor > 0.0,
            "config: chem_prefactor must be positive");
    require(lambda >= 0.0 && std::isfinite(lambda), "config: lambda must be >= 0");
    require(knn >= 1, "config: k must be >= 1");
    require(cut_radius > 0.0, "config: cut_radius must be positive");
    require(depth >= 1, "config: depth must be >= 1");
    require(hidden_dim >= 1 && message_dim >= 1 && phi_hidden >= 1,
            "config: layer widths must be >= 1");
    require(fp_width >= 1, "config: fp_width must be >= 1");
    require(learning_rate > 0.0 && std::isfinite(learning_rate),
            "config: learning rate must be positive");
  }
};

namespace config_detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("config: bad boolean for " + key + ": '" + v + "'");
}

inline std::uint64_t parse_count(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(n);
  } catch (const std::exception&) {
    throw config_error("config: bad count for " + key + ": '" + v + "'");
  }
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw config_error("config: bad number for " + key + ": '" + v + "'");
  }
}

}  // namespace config_detail

inline void apply_config_value(TrainConfig& cfg, const std::string& key,
                               const std::string& value) {
  using config_detail::parse_bool;
  using config_detail::parse_count;
  using config_detail::parse_real;
  if (key == "seed") cfg.seed = parse_count(value, key);
  else if (key == "epochs") cfg.epochs = parse_count(value, key);
  else if (key == "batch_size") cfg.batch_size = parse_count(value, key);
  else if (key == "negatives") cfg.negatives = parse_count(value, key);
  else if (key == "global_negatives") cfg.global_negatives = parse_bool(value, key);
  else if (key == "loss") cfg.loss = parse_loss_kind(value);
  else if (key == "gamma") cfg.gamma = parse_real(value, key);
  else if (key == "tau") cfg.tau = parse_real(value, key);
  else if (key == "tau_plus") cfg.tau_plus = parse_real(value, key);
  else if (key == "q") cfg.q = parse_real(value, key);
  else if (key == "chem_prefactor") cfg.chem_prefactor = parse_real(value, key);
  else if (key == "lambda") cfg.lambda = parse_real(value, key);
  else if (key == "k") cfg.knn = parse_count(value, key);
  else if (key == "cut_radius") cfg.cut_radius = parse_real(value, key);
  else if (key == "depth") cfg.depth = parse_count(value, key);
  else if (key == "hidden_dim") cfg.hidden_dim = parse_count(value, key);
  else if (key == "message_dim") cfg.message_dim = parse_count(value, key);
  else if (key == "phi_hidden") cfg.phi_hidden = parse_count(value, key);
  else if (key == "phi_depth") cfg.phi_depth = parse_count(value, key);
  else if (key == "fp_radius") cfg.fp_radius = parse_count(value, key);
  else if (key == "fp_width") cfg.fp_width = parse_count(value, key);
  else if (key == "learning_rate" || key == "lr") cfg.learning_rate = parse_real(value, key);
  else if (key == "optimizer") {
    if (value == "sgd") cfg.optimizer = OptimizerKind::sgd;
    else if (value == "adam") cfg.optimizer = OptimizerKind::adam;
    else throw config_error("config: unknown optimizer '" + value + "'");
  }
  else if (key == "checkpoint_interval") cfg.checkpoint_interval = parse_count(value, key);
  else if (key == "symmetric") cfg.symmetric = parse_bool(value, key);
  else throw config_error("config: unknown key '" + key + "'");
}

inline TrainConfig parse_config_text(std::istream& is, const std::string& origin) {
  TrainConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": expected 'key = value'");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw config_error(origin + ":" + std::to_string(line_no) + ": empty key or value");
    try {
      apply_config_value(cfg, key, value);
    } catch (const config_error& err) {
      throw config_error(origin + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  return cfg;
}

inline TrainConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open config file: " + path);
  return parse_config_text(is, path);
}

inline std::string config_to_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "seed = " << c.seed << "\n"
     << "epochs = " << c.epochs << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "negatives = " << c.negatives << "\n"
     << "global_negatives = " << (c.global_negatives ? "true" : "false") << "\n"
     << "loss = " << loss_kind_name(c.loss) << "\n"
     << "gamma = " << c.gamma << "\n"
     << "tau = " << c.tau << "\n"
     << "tau_plus = " << c.tau_plus << "\n"
     << "q = " << c.q << "\n"
     << "chem_prefactor = " << c.chem_prefactor << "\n"
     << "lambda = " << c.lambda << "\n"
     << "k = " << c.knn << "\n"
     << "cut_radius = " << c.cut_radius << "\n"
     << "depth = " << c.depth << "\n"
     << "hidden_dim = " << c.hidden_dim << "\n"
     << "message_dim = " << c.message_dim << "\n"
     << "phi_hidden = " << c.phi_hidden << "\n"
     << "phi_depth = " << c.phi_depth << "\n"
     << "fp_radius = " << c.fp_radius << "\n"
     << "fp_width = " << c.fp_width << "\n"
     << "learning_rate = " << c.learning_rate << "\n"
     << "optimizer = " << optimizer_name(c.optimizer) << "\n"
     << "checkpoint_interval = " << c.checkpoint_interval << "\n"
     << "symmetric = " << (c.symmetric ? "true" : "false") << "\n";
  return os.str();
}

inline void save_config(const TrainConfig& c, std::ostream& os) {
  serial::write_u64(os, c.seed);
  serial::write_u64(os, c.epochs);
  serial::write_u64(os, c.batch_size);
  serial::write_u64(os, c.negatives);
  serial::write_u8(os, c.global_negatives ? 1 : 0);
  serial::write_u8(os, static_cast<std::uint8_t>(c.loss));
  serial::write_double(os, c.gamma);
  serial::write_double(os, c.tau);
  serial::write_double(os, c.tau_plus);
  serial::write_double(os, c.q);
  serial::write_double(os, c.chem_prefactor);
  serial::write_double(os, c.lambda);
  serial::write_u64(os, c.knn);
  serial::write_double(os, c.cut_radius);
  serial::write_u64(os, c.depth);
  serial::write_u64(os, c.hidden_dim);
  serial::write_u64(os, c.message_dim);
  serial::write_u64(os, c.phi_hidden);
  serial::write_u64(os, c.phi_depth);
  serial::write_u64(os, c.fp_radius);
  serial::write_u64(os, c.fp_width);
  serial::write_double(os, c.learning_rate);
  serial::write_u8(os, static_cast<std::uint8_t>(c.optimizer));
  serial::write_u64(os, c.checkpoint_interval);
  serial::write_u8(os, c.symmetric ? 1 : 0);
}

inline TrainConfig load_config(std::istream& is) {
  TrainConfig c;
  c.seed = serial::read_u64(is);
  c.epochs = serial::read_u64(is);
  c.batch_size = serial::read_u64(is);
  c.negatives = serial::read_u64(is);
  c.global_negatives = serial::read_u8(is) != 0;
  c.loss = static_cast<LossKind>(serial::read_u8(is));
  c.gamma = serial::read_double(is);
  c.tau = serial::read_double(is);
  c.tau_plus = serial::read_double(is);
  c.q = serial::read_double(is);
  c.chem_prefactor = serial::read_double(is);
  c.lambda = serial::read_double(is);
  c.knn = serial::read_u64(is);
  c.cut_radius = serial::read_double(is);
  c.depth = serial::read_u64(is);
  c.hidden_dim = serial::read_u64(is);
  c.message_dim = serial::read_u64(is);
  c.phi_hidden = serial::read_u64(is);
  c.phi_depth = serial::read_u64(is);
  c.fp_radius = serial::read_u64(is);
  c.fp_width = serial::read_u64(is);
  c.learning_rate = serial::read_double(is);
  c.optimizer = static_cast<OptimizerKind>(serial::read_u8(is));
  c.checkpoint_interval = serial::read_u64(is);
  c.symmetric = serial::read_u8(is) != 0;
  return c;
}

}  // namespace geocon

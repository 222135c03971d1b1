// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "geocon/config.hpp"
#include "geocon/ggmp.hpp"
#include "geocon/optimizer.hpp"

namespace geocon {

inline constexpr char kCheckpointMagic[8] = {'G', 'E', 'O', 'C', 'K', '0', '0', '1'};

// Full training state: config snapshot, both encoders, optimizer moments,
// epoch counter and the last epoch's metrics. The byte stream is a pure
// function of the state, so save -> load -> save round-trips bit-exactly.
struct Checkpoint {
  TrainConfig config;
  GgmpEncoder pocket_encoder;
  GgmpEncoder ligand_encoder;
  Optimizer optimizer;
  std::uint64_t epoch = 0;
  double last_loss = 0.0;
  double last_pos_cos = 0.0;
  double last_neg_cos = 0.0;
  double last_zero_weight_frac = 0.0;

  void save(std::ostream& os) const {
    serial::write_bytes(os, kCheckpointMagic, sizeof(kCheckpointMagic));
    save_config(config, os);
    pocket_encoder.save(os);
    ligand_encoder.save(os);
    optimizer.save(os);
    serial::write_u64(os, epoch);
    serial::write_double(os, last_loss);
    serial::write_double(os, last_pos_cos);
    serial::write_double(os, last_neg_cos);
    serial::write_double(os, last_zero_weight_frac);
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot write checkpoint: " + path);
    save(os);
  }

  static Checkpoint load(std::istream& is) {
    char magic[8];
    serial::read_bytes(is, magic, sizeof(magic));
    for (std::size_t i = 0; i < sizeof(magic); ++i)
      if (magic[i] != kCheckpointMagic[i])
        throw data_error("checkpoint: bad magic (not a geocon checkpoint)");
    Checkpoint ck;
    ck.config = load_config(is);
    ck.pocket_encoder.load(is);
    ck.ligand_encoder.load(is);
    ck.optimizer.load(is);
    ck.epoch = serial::read_u64(is);
    ck.last_loss = serial::read_double(is);
    ck.last_pos_cos = serial::read_double(is);
    ck.last_neg_cos = serial::read_double(is);
    ck.last_zero_weight_frac = serial::read_double(is);
    return ck;
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open checkpoint: " + path);
    return load(is);
  }

  std::string to_bytes() const {
    std::ostringstream os(std::ios::binary);
    save(os);
    return os.str();
  }
};

}  // namespace geocon

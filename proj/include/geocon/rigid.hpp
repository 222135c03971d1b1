// SPDX-FileCopyrightText: Copyright (c) 2026 The geocon authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

#include "geocon/common.hpp"
#include "geocon/rng.hpp"

namespace geocon {

struct Rotation {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major 3x3

  Vec3 apply(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
};

// Uniform random rotation via quaternion; with allow_reflection, half the
// draws get det = -1 (full O(3) rather than SO(3)).
inline Rotation random_rotation(Rng& rng, bool allow_reflection = false) {
  double x = rng.normal(), y = rng.normal(), z = rng.normal(), w = rng.normal();
  const double n = std::sqrt(x * x + y * y + z * z + w * w);
  x /= n;
  y /= n;
  z /= n;
  w /= n;
  Rotation r;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
         2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
         2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
  if (allow_reflection && rng.uniform() < 0.5)
    for (int c = 0; c < 3; ++c) r.m[6 + c] = -r.m[6 + c];
  return r;
}

struct RigidMotion {
  Rotation rot;
  Vec3 shift;

  Vec3 apply_point(const Vec3& p) const { return rot.apply(p) + shift; }
  Vec3 apply_vector(const Vec3& v) const { return rot.apply(v); }
};

inline RigidMotion random_rigid_motion(Rng& rng, bool allow_reflection = false,
                                       double max_shift = 10.0) {
  RigidMotion m;
  m.rot = random_rotation(rng, allow_reflection);
  m.shift = {rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift),
             rng.uniform(-max_shift, max_shift)};
  return m;
}

}  // namespace geocon

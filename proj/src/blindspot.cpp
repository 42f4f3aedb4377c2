// Copyright 2026 The RALF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ralf/blindspot.hpp"

#include <cmath>

namespace ralf
{

void BlindspotCone::validate() const
{
  if (!(z_l > 0.0) || !(alpha_l > 0.0 && alpha_l < kPi / 2.0)) {
    throw std::invalid_argument("blind spot cone requires z_l > 0 and alpha_l in (0, pi/2)");
  }
}

bool in_blindspot(const CartesianPoint & p, const BlindspotCone & cone)
{
  if (p.z_m < 0.0 || p.z_m > cone.z_l) {
    return false;
  }
  const double radius = std::hypot(p.x_m - cone.x_l, p.y_m);
  return radius <= (cone.z_l - p.z_m) / std::tan(cone.alpha_l);
}

Score combine_optical(Score w_lm, Score w_cm, const CartesianPoint & p, const BlindspotCone & cone)
{
  const bool camera_first = in_blindspot(p, cone);
  const Score & preferred = camera_first ? w_cm : w_lm;
  const Score & fallback = camera_first ? w_lm : w_cm;
  return preferred ? preferred : fallback;
}

}  // namespace ralf

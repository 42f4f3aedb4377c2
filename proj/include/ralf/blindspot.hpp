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

#ifndef RALF__BLINDSPOT_HPP_
#define RALF__BLINDSPOT_HPP_

#include "ralf/core.hpp"

namespace ralf
{

/// Cone under a roof-mounted rotating LiDAR that its lowest beam cannot reach.
/// alpha_l is the depression angle of the cone surface below the horizontal.
struct BlindspotCone
{
  double x_l{0.0};
  double z_l{1.8};
  double alpha_l{1.2};

  void validate() const;
};

bool in_blindspot(const CartesianPoint & p, const BlindspotCone & cone);

/// Camera inside the blind spot, LiDAR elsewhere; falls back to whichever branch is available.
Score combine_optical(Score w_lm, Score w_cm, const CartesianPoint & p, const BlindspotCone & cone);

}  // namespace ralf

#endif  // RALF__BLINDSPOT_HPP_

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

#ifndef RALF__FUSION_HPP_
#define RALF__FUSION_HPP_

#include "ralf/core.hpp"

#include <utility>
#include <vector>

namespace ralf
{

/// A-priori accuracy loss of a radar over its azimuth range, as a divisor gamma >= 1.
/// Breakpoints are interpolated linearly and wrap around at +-pi.
class AzimuthReliabilityProfile
{
public:
  struct Breakpoint
  {
    double azimuth_rad;
    double gamma;
  };

  /// gamma = 1 everywhere.
  AzimuthReliabilityProfile();
  /// Throws std::invalid_argument unless azimuths are strictly increasing in (-pi, pi] and
  /// every gamma >= 1.
  explicit AzimuthReliabilityProfile(std::vector<Breakpoint> breakpoints);

  /// gamma 1 at boresight rising linearly to `edge_gamma` at +-`edge_rad`, flat beyond.
  static AzimuthReliabilityProfile symmetric(double edge_rad, double edge_gamma);

  double gamma_at(double azimuth_rad) const;
  const std::vector<Breakpoint> & breakpoints() const { return breakpoints_; }

private:
  std::vector<Breakpoint> breakpoints_;
};

inline double gamma_at(const AzimuthReliabilityProfile & profile, double azimuth_rad)
{
  return profile.gamma_at(azimuth_rad);
}

struct FusionConfig
{
  double alpha{0.5};
  double w0{0.3};

  void validate() const;
};

struct FusionResult
{
  double w_fused{0.0};
  int y_hat{0};
  bool no_evidence{false};
};

/// Weighted combination of the optical and tracking scores divided by gamma, thresholded at w0
/// (boundary counts as plausible). A missing branch hands its share to the other one; with
/// both missing the detection is labeled an artifact and flagged.
FusionResult fuse_and_label(Score w_opt, Score w_tr, double gamma, const FusionConfig & cfg);

inline FusionResult fuse_and_label(
  Score w_opt, Score w_tr, double azimuth_rad, const AzimuthReliabilityProfile & profile,
  const FusionConfig & cfg)
{
  return fuse_and_label(w_opt, w_tr, profile.gamma_at(azimuth_rad), cfg);
}

}  // namespace ralf

#endif  // RALF__FUSION_HPP_

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

#include "ralf/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ralf
{

AzimuthReliabilityProfile::AzimuthReliabilityProfile() : breakpoints_{{0.0, 1.0}} {}

AzimuthReliabilityProfile::AzimuthReliabilityProfile(std::vector<Breakpoint> breakpoints)
: breakpoints_(std::move(breakpoints))
{
  if (breakpoints_.empty()) {
    throw std::invalid_argument("azimuth profile needs at least one breakpoint");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const auto & b = breakpoints_[i];
    if (!(b.gamma >= 1.0) || !std::isfinite(b.gamma)) {
      throw std::invalid_argument("azimuth profile gamma must be >= 1");
    }
    if (!(b.azimuth_rad > -kPi && b.azimuth_rad <= kPi)) {
      throw std::invalid_argument("azimuth profile breakpoints must lie in (-pi, pi]");
    }
    if (i > 0 && !(b.azimuth_rad > breakpoints_[i - 1].azimuth_rad)) {
      throw std::invalid_argument("azimuth profile breakpoints must be strictly increasing");
    }
  }
}

AzimuthReliabilityProfile AzimuthReliabilityProfile::symmetric(double edge_rad, double edge_gamma)
{
  return AzimuthReliabilityProfile({{-edge_rad, edge_gamma}, {0.0, 1.0}, {edge_rad, edge_gamma}});
}

double AzimuthReliabilityProfile::gamma_at(double azimuth_rad) const
{
  const auto & b = breakpoints_;
  if (b.size() == 1) {
    return b.front().gamma;
  }
  const double az = normalize_azimuth(azimuth_rad);
  const auto upper = std::upper_bound(
    b.begin(), b.end(), az, [](double value, const Breakpoint & p) { return value < p.azimuth_rad; });

  // Segment endpoints, unwrapping across +-pi when az lies outside [first, last].
  Breakpoint lo{};
  Breakpoint hi{};
  if (upper == b.begin() || upper == b.end()) {
    lo = b.back();
    hi = b.front();
    hi.azimuth_rad += 2.0 * kPi;
    const double x = upper == b.begin() ? az + 2.0 * kPi : az;
    if (hi.azimuth_rad == lo.azimuth_rad) {
      return lo.gamma;
    }
    const double t = (x - lo.azimuth_rad) / (hi.azimuth_rad - lo.azimuth_rad);
    return lo.gamma + t * (hi.gamma - lo.gamma);
  }
  lo = *std::prev(upper);
  hi = *upper;
  const double t = (az - lo.azimuth_rad) / (hi.azimuth_rad - lo.azimuth_rad);
  return lo.gamma + t * (hi.gamma - lo.gamma);
}

void FusionConfig::validate() const
{
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(w0 >= 0.0 && w0 <= 1.0)) {
    throw std::invalid_argument("fusion requires alpha and w0 in [0, 1]");
  }
}

FusionResult fuse_and_label(Score w_opt, Score w_tr, double gamma, const FusionConfig & cfg)
{
  FusionResult out;
  double numerator = 0.0;
  if (w_opt && w_tr) {
    numerator = cfg.alpha * *w_opt + (1.0 - cfg.alpha) * *w_tr;
  } else if (w_opt) {
    numerator = *w_opt;
  } else if (w_tr) {
    numerator = *w_tr;
  } else {
    out.no_evidence = true;
    return out;
  }
  out.w_fused = numerator / gamma;
  out.y_hat = out.w_fused >= cfg.w0 ? 1 : 0;
  return out;
}

}  // namespace ralf

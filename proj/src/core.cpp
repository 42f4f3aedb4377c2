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

#include "ralf/core.hpp"

#include <cmath>

namespace ralf
{

double normalize_azimuth(double angle_rad)
{
  double a = std::remainder(angle_rad, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) {
    a += 2.0 * kPi;
  }
  return a;
}

void SensorUncertainty::validate() const
{
  if (!(sigma_r_radar_m > 0.0 && sigma_az_radar_rad > 0.0 && sigma_el_radar_rad > 0.0 &&
        sigma_r_lidar_m > 0.0)) {
    throw std::invalid_argument("sensor uncertainties must be strictly positive");
  }
}

Eigen::Matrix3d yaw_rotation(double yaw_rad)
{
  const double c = std::cos(yaw_rad);
  const double s = std::sin(yaw_rad);
  Eigen::Matrix3d r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

CartesianPoint spherical_to_cartesian(const SphericalPoint & p, const MountingPose & mount)
{
  const double ce = std::cos(p.elevation_rad);
  const double local_x = p.range_m * ce * std::cos(p.azimuth_rad);
  const double local_y = p.range_m * ce * std::sin(p.azimuth_rad);
  const double local_z = p.range_m * std::sin(p.elevation_rad);

  const double c = std::cos(mount.yaw_rad);
  const double s = std::sin(mount.yaw_rad);
  return {
    c * local_x - s * local_y + mount.x_m,
    s * local_x + c * local_y + mount.y_m,
    local_z + mount.z_m,
  };
}

SphericalPoint cartesian_to_spherical(const CartesianPoint & p, const MountingPose & mount)
{
  const double dx = p.x_m - mount.x_m;
  const double dy = p.y_m - mount.y_m;
  const double dz = p.z_m - mount.z_m;
  const double c = std::cos(mount.yaw_rad);
  const double s = std::sin(mount.yaw_rad);
  const double local_x = c * dx + s * dy;
  const double local_y = -s * dx + c * dy;

  const double horizontal = std::hypot(local_x, local_y);
  const double range = std::hypot(horizontal, dz);
  if (range == 0.0) {
    return {};
  }
  return {range, normalize_azimuth(std::atan2(local_y, local_x)), std::atan2(dz, horizontal)};
}

SphericalJacobian spherical_jacobian(const SphericalPoint & p, const MountingPose & mount)
{
  const double ca = std::cos(p.azimuth_rad);
  const double sa = std::sin(p.azimuth_rad);
  const double ce = std::cos(p.elevation_rad);
  const double se = std::sin(p.elevation_rad);
  const double r = p.range_m;
  const Eigen::Matrix3d rot = yaw_rotation(mount.yaw_rad);
  return {
    rot * Eigen::Vector3d{ce * ca, ce * sa, se},
    rot * Eigen::Vector3d{-r * ce * sa, r * ce * ca, 0.0},
    rot * Eigen::Vector3d{-r * se * ca, -r * se * sa, r * ce},
  };
}

}  // namespace ralf

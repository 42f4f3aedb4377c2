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

#include "ralf/lidar_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ralf
{

void LidarMatchConfig::validate() const
{
  if (k < 1 || !(beta > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("lidar match requires K >= 1, beta > 0, epsilon > 0");
  }
}

namespace
{

std::vector<CartesianPoint> to_vehicle(const std::vector<SphericalPoint> & local, const MountingPose & mount)
{
  std::vector<CartesianPoint> out;
  out.reserve(local.size());
  for (const auto & p : local) {
    out.push_back(spherical_to_cartesian(p, mount));
  }
  return out;
}

}  // namespace

LidarScan::LidarScan(std::vector<SphericalPoint> local_points, const MountingPose & mount)
: local_(std::move(local_points)), mount_(mount), index_(to_vehicle(local_, mount))
{
}

double normalized_distance(double distance_sq, double sigma_d_sq, double epsilon)
{
  return std::sqrt(distance_sq / (sigma_d_sq + epsilon));
}

std::vector<Score> lidar_match(
  std::span<const RadarDetection> detections, const LidarScan & lidar, const SensorRig & rig,
  const LidarMatchConfig & cfg)
{
  std::vector<Score> out(detections.size());
  if (lidar.empty()) {
    return out;
  }

  for (std::size_t i = 0; i < detections.size(); ++i) {
    const RadarDetection & det = detections[i];
    const MountingPose & radar_mount = rig.radar_mount(det.sensor_id);
    const CartesianPoint radar_pos = spherical_to_cartesian(det.position, radar_mount);

    const auto neighbors = lidar.index().knn(radar_pos, cfg.k);
    double d = 0.0;
    for (const Neighbor & n : neighbors) {
      const double sigma = propagate_distance_sigma(
        det.position, radar_mount, lidar.local_points()[n.index], lidar.mount(),
        rig.uncertainty);
      d += normalized_distance(n.distance_sq, sigma * sigma, cfg.epsilon);
    }
    // Floor at the smallest normal double so a distant detection still scores above zero.
    out[i] = std::max(
      std::exp(-cfg.beta * d / static_cast<double>(neighbors.size())),
      std::numeric_limits<double>::min());
  }
  return out;
}

}  // namespace ralf

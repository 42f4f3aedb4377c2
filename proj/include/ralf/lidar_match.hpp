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

#ifndef RALF__LIDAR_MATCH_HPP_
#define RALF__LIDAR_MATCH_HPP_

#include "ralf/core.hpp"
#include "ralf/geometry.hpp"
#include "ralf/rig.hpp"

#include <span>
#include <vector>

namespace ralf
{

struct LidarMatchConfig
{
  std::size_t k{3};
  double beta{0.25};
  double epsilon{1e-3};

  void validate() const;
};

/// A LiDAR frame transformed to the vehicle frame and indexed for neighbor queries. Keeps the
/// sensor-local spherical measurements, which the uncertainty model needs.
class LidarScan
{
public:
  LidarScan() = default;
  LidarScan(std::vector<SphericalPoint> local_points, const MountingPose & mount);

  const KnnIndex & index() const { return index_; }
  const std::vector<SphericalPoint> & local_points() const { return local_; }
  const MountingPose & mount() const { return mount_; }
  bool empty() const { return local_.empty(); }

private:
  std::vector<SphericalPoint> local_;
  MountingPose mount_;
  KnnIndex index_;
};

/// One term of the accumulated mismatch: sqrt(|dp|^2 / (sigma_d^2 + epsilon)).
double normalized_distance(double distance_sq, double sigma_d_sq, double epsilon);

/// Plausibility of each detection from its K nearest LiDAR neighbors, in (0, 1]. Every entry is
/// std::nullopt when the scan is empty; with fewer than K points all of them are used and the
/// sum is divided by the actual count.
std::vector<Score> lidar_match(
  std::span<const RadarDetection> detections, const LidarScan & lidar, const SensorRig & rig,
  const LidarMatchConfig & cfg);

inline std::vector<Score> lidar_match(
  const RadarFrame & radar, const LidarScan & lidar, const SensorRig & rig,
  const LidarMatchConfig & cfg)
{
  return lidar_match(std::span<const RadarDetection>(radar.detections), lidar, rig, cfg);
}

}  // namespace ralf

#endif  // RALF__LIDAR_MATCH_HPP_

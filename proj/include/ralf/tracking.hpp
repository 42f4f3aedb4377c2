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

#ifndef RALF__TRACKING_HPP_
#define RALF__TRACKING_HPP_

#include "ralf/core.hpp"
#include "ralf/geometry.hpp"
#include "ralf/ingest.hpp"
#include "ralf/rig.hpp"

#include <span>
#include <vector>

namespace ralf
{

struct TrackingConfig
{
  int n_b{5};
  double beta{0.2};
  /// Ratio of the geometric coefficients applied to the ascending distances.
  double rho{0.5};
  std::size_t k{1};
  double epsilon{1e-3};

  void validate() const;
};

/// One Euler step of the planar single-track model.
VehicleState integrate_pose(const VehicleState & state, const OdometrySample & odom, double dt_s);

/// Poses at each scan time, starting from the origin. `odometry[i]` holds speed and yaw rate at
/// `timestamps[i]`, kept constant until the next scan.
std::vector<VehicleState> integrate_trajectory(
  std::span<const Timestamp> timestamps, std::span<const OdometrySample> odometry);

/// Expresses a point measured in the vehicle frame at pose_kj in the vehicle frame at pose_k.
CartesianPoint compensate_point(
  const CartesianPoint & p, const VehicleState & pose_k, const VehicleState & pose_kj);

std::vector<CartesianPoint> compensate(
  const RadarFrame & frame, const SensorRig & rig, const VehicleState & pose_k,
  const VehicleState & pose_kj);

/// A neighbor scan moved into the reference pose, with what the uncertainty model needs.
struct CompensatedScan
{
  int offset{0};
  double relative_yaw_rad{0.0};
  std::vector<CartesianPoint> points;
  std::vector<SphericalPoint> local;
  std::vector<MountingPose> mounts;
  KnnIndex index;
};

struct TrackingWindow
{
  std::vector<RadarDetection> reference;
  std::vector<CompensatedScan> neighbors;  // sorted by offset
};

/// Buffers up to n_b scans on either side of `reference_index`; truncated at sequence edges.
TrackingWindow build_tracking_window(
  std::span<const RadarFrame> scans, std::span<const VehicleState> poses,
  std::size_t reference_index, int n_b, const SensorRig & rig);

/// Weighted mean of the ascending distances with coefficients rho^(m-1).
double sorted_weighted_mean(std::vector<double> distances, double rho);

/// Reoccurrence score per reference detection. std::nullopt when the window holds no
/// non-empty neighbor scan.
std::vector<Score> tracking_score(
  const TrackingWindow & window, const SensorRig & rig, const TrackingConfig & cfg);

}  // namespace ralf

#endif  // RALF__TRACKING_HPP_

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

#include "ralf/tracking.hpp"

#include "ralf/lidar_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ralf
{

void TrackingConfig::validate() const
{
  if (n_b < 1 || !(beta > 0.0) || !(rho > 0.0 && rho < 1.0) || k < 1 || !(epsilon > 0.0)) {
    throw std::invalid_argument("tracking requires n_b >= 1, beta > 0, rho in (0,1), K >= 1");
  }
}

VehicleState integrate_pose(const VehicleState & state, const OdometrySample & odom, double dt_s)
{
  return {
    state.x_m + dt_s * odom.speed_mps * std::cos(state.yaw_rad),
    state.y_m + dt_s * odom.speed_mps * std::sin(state.yaw_rad),
    state.z_m,
    state.yaw_rad + dt_s * odom.yaw_rate_radps,
  };
}

std::vector<VehicleState> integrate_trajectory(
  std::span<const Timestamp> timestamps, std::span<const OdometrySample> odometry)
{
  if (timestamps.size() != odometry.size()) {
    throw std::invalid_argument("one odometry sample per scan is required");
  }
  std::vector<VehicleState> poses;
  poses.reserve(timestamps.size());
  if (timestamps.empty()) {
    return poses;
  }
  poses.push_back({});
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const double dt = static_cast<double>(timestamps[i] - timestamps[i - 1]) * 1e-9;
    poses.push_back(integrate_pose(poses.back(), odometry[i - 1], dt));
  }
  return poses;
}

CartesianPoint compensate_point(
  const CartesianPoint & p, const VehicleState & pose_k, const VehicleState & pose_kj)
{
  const Eigen::Vector3d delta{pose_kj.x_m - pose_k.x_m, pose_kj.y_m - pose_k.y_m, pose_kj.z_m - pose_k.z_m};
  const Eigen::Vector3d out = yaw_rotation(pose_k.yaw_rad).transpose() * delta +
                              yaw_rotation(pose_kj.yaw_rad - pose_k.yaw_rad) * p.vec();
  return CartesianPoint::from(out);
}

std::vector<CartesianPoint> compensate(
  const RadarFrame & frame, const SensorRig & rig, const VehicleState & pose_k,
  const VehicleState & pose_kj)
{
  std::vector<CartesianPoint> out;
  out.reserve(frame.detections.size());
  for (const auto & det : frame.detections) {
    out.push_back(compensate_point(
      spherical_to_cartesian(det.position, rig.radar_mount(det.sensor_id)), pose_k, pose_kj));
  }
  return out;
}

TrackingWindow build_tracking_window(
  std::span<const RadarFrame> scans, std::span<const VehicleState> poses,
  std::size_t reference_index, int n_b, const SensorRig & rig)
{
  if (scans.size() != poses.size() || reference_index >= scans.size()) {
    throw std::invalid_argument("tracking window: scans and poses mismatch");
  }
  TrackingWindow window;
  window.reference = scans[reference_index].detections;
  const auto ref = static_cast<std::ptrdiff_t>(reference_index);
  const auto count = static_cast<std::ptrdiff_t>(scans.size());
  for (std::ptrdiff_t j = -n_b; j <= n_b; ++j) {
    const std::ptrdiff_t idx = ref + j;
    if (j == 0 || idx < 0 || idx >= count) {
      continue;
    }
    const RadarFrame & frame = scans[static_cast<std::size_t>(idx)];
    CompensatedScan scan;
    scan.offset = static_cast<int>(j);
    scan.relative_yaw_rad = poses[idx].yaw_rad - poses[ref].yaw_rad;
    scan.points = compensate(frame, rig, poses[ref], poses[idx]);
    scan.local.reserve(frame.detections.size());
    scan.mounts.reserve(frame.detections.size());
    for (const auto & det : frame.detections) {
      scan.local.push_back(det.position);
      scan.mounts.push_back(rig.radar_mount(det.sensor_id));
    }
    scan.index = KnnIndex(scan.points);
    window.neighbors.push_back(std::move(scan));
  }
  return window;
}

double sorted_weighted_mean(std::vector<double> distances, double rho)
{
  if (distances.empty()) {
    return 0.0;
  }
  std::sort(distances.begin(), distances.end());
  double weighted = 0.0;
  double norm = 0.0;
  double c = 1.0;
  for (const double d : distances) {
    weighted += c * d;
    norm += c;
    c *= rho;
  }
  return weighted / norm;
}

namespace
{

/// Radar-to-radar sigma_d^2: radar terms of the reference and of the compensated neighbor.
double radar_pair_variance(
  const Eigen::Vector3d & h, const RadarDetection & ref, const MountingPose & ref_mount,
  const SphericalPoint & other, const MountingPose & other_mount, double relative_yaw,
  const SensorUncertainty & u)
{
  const double d = h.norm();
  if (d == 0.0) {
    return u.sigma_r_radar_m * u.sigma_r_radar_m;
  }
  // The compensated neighbor is rotated by the relative yaw; translation does not enter the
  // Jacobian.
  const MountingPose rotated{0.0, 0.0, 0.0, other_mount.yaw_rad + relative_yaw};
  return radar_variance_term(h, ref.position, ref_mount, u) + radar_variance_term(h, other, rotated, u);
}

}  // namespace

std::vector<Score> tracking_score(
  const TrackingWindow & window, const SensorRig & rig, const TrackingConfig & cfg)
{
  std::vector<Score> out(window.reference.size());
  std::vector<double> distances;
  for (std::size_t i = 0; i < window.reference.size(); ++i) {
    const RadarDetection & det = window.reference[i];
    const MountingPose & mount = rig.radar_mount(det.sensor_id);
    const CartesianPoint pos = spherical_to_cartesian(det.position, mount);

    distances.clear();
    for (const auto & scan : window.neighbors) {
      if (scan.points.empty()) {
        continue;
      }
      const auto neighbors = scan.index.knn(pos, cfg.k);
      double d = 0.0;
      for (const auto & n : neighbors) {
        const Eigen::Vector3d h = pos.vec() - scan.points[n.index].vec();
        const double var = radar_pair_variance(
          h, det, mount, scan.local[n.index], scan.mounts[n.index], scan.relative_yaw_rad,
          rig.uncertainty);
        d += normalized_distance(n.distance_sq, var, cfg.epsilon);
      }
      distances.push_back(d / static_cast<double>(neighbors.size()));
    }
    if (distances.empty()) {
      continue;
    }
    const double mean = sorted_weighted_mean(distances, cfg.rho);
    out[i] = std::max(std::exp(-cfg.beta * mean), std::numeric_limits<double>::min());
  }
  return out;
}

}  // namespace ralf

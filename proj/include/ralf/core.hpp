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

#ifndef RALF__CORE_HPP_
#define RALF__CORE_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Vehicle frame convention used throughout: x forward, y left, z up (right-handed).
// Every sensor measurement is matched in vehicle-frame Cartesian coordinates.
namespace ralf
{

using Timestamp = std::int64_t;  // nanoseconds

/// Plausibility score of one branch; std::nullopt means the branch produced no evidence.
using Score = std::optional<double>;

inline constexpr double kPi = std::numbers::pi;

class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle into (-pi, pi].
double normalize_azimuth(double angle_rad);

struct SphericalPoint
{
  double range_m{0.0};
  double azimuth_rad{0.0};
  double elevation_rad{0.0};
};

struct CartesianPoint
{
  double x_m{0.0};
  double y_m{0.0};
  double z_m{0.0};

  Eigen::Vector3d vec() const { return {x_m, y_m, z_m}; }
  static CartesianPoint from(const Eigen::Vector3d & v) { return {v.x(), v.y(), v.z()}; }

  friend bool operator==(const CartesianPoint &, const CartesianPoint &) = default;
};

struct RadarDetection
{
  SphericalPoint position;
  double doppler_mps{0.0};
  double power_db{0.0};
  std::string sensor_id;
};

struct RadarFrame
{
  Timestamp timestamp_ns{0};
  std::vector<RadarDetection> detections;
};

struct LidarFrame
{
  Timestamp timestamp_ns{0};
  std::vector<SphericalPoint> points;
};

/// Sensor origin in the vehicle frame. The yaw rotation is applied before the translation.
struct MountingPose
{
  double x_m{0.0};
  double y_m{0.0};
  double z_m{0.0};
  double yaw_rad{0.0};
};

struct SensorUncertainty
{
  double sigma_r_radar_m{0.1};
  double sigma_az_radar_rad{0.0175};
  double sigma_el_radar_rad{0.0175};
  double sigma_r_lidar_m{0.03};

  void validate() const;
};

struct VehicleState
{
  double x_m{0.0};
  double y_m{0.0};
  double z_m{0.0};
  double yaw_rad{0.0};
};

struct PlausibilityRecord
{
  Timestamp frame_ts_ns{0};
  std::size_t detection_index{0};
  Score w_lm;
  Score w_cm;
  Score w_opt;
  Score w_tr;
  double w_fused{0.0};
  int y_hat{0};
  std::optional<int> y_corrected;
  bool ground_filtered{false};
  bool no_evidence{false};

  /// Reviewer label when present, prediction otherwise.
  int effective_label() const { return y_corrected.value_or(y_hat); }
};

CartesianPoint spherical_to_cartesian(const SphericalPoint & p, const MountingPose & mount);

/// Zero-range points map to azimuth = elevation = 0.
SphericalPoint cartesian_to_spherical(const CartesianPoint & p, const MountingPose & mount);

/// Derivatives of the vehicle-frame position with respect to the spherical coordinates.
struct SphericalJacobian
{
  Eigen::Vector3d d_range;
  Eigen::Vector3d d_azimuth;
  Eigen::Vector3d d_elevation;
};

SphericalJacobian spherical_jacobian(const SphericalPoint & p, const MountingPose & mount);

Eigen::Matrix3d yaw_rotation(double yaw_rad);

}  // namespace ralf

#endif  // RALF__CORE_HPP_

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

#ifndef RALF__RIG_HPP_
#define RALF__RIG_HPP_

#include "ralf/blindspot.hpp"
#include "ralf/core.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ralf
{

/// Pinhole camera for a rectified image. `extrinsics` maps vehicle-frame homogeneous points
/// into the camera optical frame (x right, y down, z along the optical axis).
struct CameraCalibration
{
  std::string id;
  int width{0};
  int height{0};
  Eigen::Matrix3d intrinsics{Eigen::Matrix3d::Identity()};
  Eigen::Matrix4d extrinsics{Eigen::Matrix4d::Identity()};
  double depth_sigma_rel{0.1};

  void validate() const;
  Eigen::Vector3d center_in_vehicle() const;
};

struct RadarSensor
{
  std::string id;
  MountingPose mount;
  double fov_rad{160.0 * kPi / 180.0};
};

struct SensorRig
{
  std::vector<RadarSensor> radars;
  MountingPose lidar_mount;
  SensorUncertainty uncertainty;
  BlindspotCone blindspot;
  std::vector<CameraCalibration> cameras;

  /// Throws DataError for an unknown sensor id.
  const MountingPose & radar_mount(const std::string & sensor_id) const;
  void validate() const;
};

SensorRig rig_from_json(const nlohmann::json & j);
nlohmann::json rig_to_json(const SensorRig & rig);
SensorRig load_rig(const std::filesystem::path & path);
void save_rig(const SensorRig & rig, const std::filesystem::path & path);

/// Rigid camera<-vehicle transform for a camera at `position` looking along vehicle-frame
/// yaw `yaw_rad`, tilted down by `pitch_down_rad`.
Eigen::Matrix4d camera_extrinsics(const Eigen::Vector3d & position, double yaw_rad,
                                  double pitch_down_rad);

}  // namespace ralf

#endif  // RALF__RIG_HPP_

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

#include "ralf/rig.hpp"

#include "json_util.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <set>

namespace ralf
{

using nlohmann::json;
using detail::read_optional;
using detail::read_required;
using detail::reject_unknown_keys;

void CameraCalibration::validate() const
{
  if (width <= 0 || height <= 0) {
    throw DataError("camera " + id + ": image size must be positive");
  }
  if (std::abs(intrinsics.determinant()) < 1e-12) {
    throw DataError("camera " + id + ": intrinsic matrix is singular");
  }
  const Eigen::Matrix3d r = extrinsics.topLeftCorner<3, 3>();
  if (!(r.transpose() * r).isApprox(Eigen::Matrix3d::Identity(), 1e-9) ||
      std::abs(r.determinant() - 1.0) > 1e-9) {
    throw DataError("camera " + id + ": extrinsic rotation is not orthonormal");
  }
  if (!(depth_sigma_rel > 0.0)) {
    throw DataError("camera " + id + ": depth_sigma_rel must be positive");
  }
}

Eigen::Vector3d CameraCalibration::center_in_vehicle() const
{
  const Eigen::Matrix3d r = extrinsics.topLeftCorner<3, 3>();
  return -r.transpose() * extrinsics.topRightCorner<3, 1>();
}

const MountingPose & SensorRig::radar_mount(const std::string & sensor_id) const
{
  for (const auto & radar : radars) {
    if (radar.id == sensor_id) {
      return radar.mount;
    }
  }
  throw DataError("unknown radar sensor id '" + sensor_id + "'");
}

void SensorRig::validate() const
{
  std::set<std::string> ids;
  for (const auto & radar : radars) {
    if (!ids.insert(radar.id).second) {
      throw DataError("duplicate radar id '" + radar.id + "'");
    }
  }
  ids.clear();
  for (const auto & camera : cameras) {
    camera.validate();
    if (!ids.insert(camera.id).second) {
      throw DataError("duplicate camera id '" + camera.id + "'");
    }
  }
  try {
    uncertainty.validate();
    blindspot.validate();
  } catch (const std::invalid_argument & e) {
    throw DataError(e.what());
  }
}

namespace
{

MountingPose mount_from_json(const json & j, std::string_view context)
{
  reject_unknown_keys(j, {"x_m", "y_m", "z_m", "yaw_rad"}, context);
  MountingPose m;
  read_optional(j, "x_m", m.x_m, context);
  read_optional(j, "y_m", m.y_m, context);
  read_optional(j, "z_m", m.z_m, context);
  read_optional(j, "yaw_rad", m.yaw_rad, context);
  return m;
}

json mount_to_json(const MountingPose & m)
{
  return {{"x_m", m.x_m}, {"y_m", m.y_m}, {"z_m", m.z_m}, {"yaw_rad", m.yaw_rad}};
}

template <int R, int C>
Eigen::Matrix<double, R, C> matrix_from_json(const json & j, std::string_view context)
{
  if (!j.is_array() || j.size() != static_cast<std::size_t>(R * C)) {
    throw DataError(std::string(context) + ": expected " + std::to_string(R * C) + " values");
  }
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      m(r, c) = j.at(static_cast<std::size_t>(r * C + c)).get<double>();
    }
  }
  return m;
}

template <typename Derived>
json matrix_to_json(const Eigen::MatrixBase<Derived> & m)
{
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      out.push_back(m(r, c));
    }
  }
  return out;
}

}  // namespace

SensorRig rig_from_json(const json & j)
{
  reject_unknown_keys(j, {"radars", "lidar", "uncertainty", "blindspot", "cameras"}, "rig");
  SensorRig rig;

  if (j.contains("radars")) {
    for (const auto & r : j.at("radars")) {
      reject_unknown_keys(r, {"id", "mount", "fov_rad"}, "rig.radars[]");
      RadarSensor sensor;
      sensor.id = read_required<std::string>(r, "id", "rig.radars[]");
      if (r.contains("mount")) {
        sensor.mount = mount_from_json(r.at("mount"), "rig.radars[].mount");
      }
      read_optional(r, "fov_rad", sensor.fov_rad, "rig.radars[]");
      rig.radars.push_back(std::move(sensor));
    }
  }

  if (j.contains("lidar")) {
    const auto & l = j.at("lidar");
    reject_unknown_keys(l, {"mount"}, "rig.lidar");
    if (l.contains("mount")) {
      rig.lidar_mount = mount_from_json(l.at("mount"), "rig.lidar.mount");
    }
  }

  if (j.contains("uncertainty")) {
    const auto & u = j.at("uncertainty");
    constexpr auto ctx = "rig.uncertainty";
    reject_unknown_keys(
      u, {"sigma_r_radar_m", "sigma_az_radar_rad", "sigma_el_radar_rad", "sigma_r_lidar_m"}, ctx);
    read_optional(u, "sigma_r_radar_m", rig.uncertainty.sigma_r_radar_m, ctx);
    read_optional(u, "sigma_az_radar_rad", rig.uncertainty.sigma_az_radar_rad, ctx);
    read_optional(u, "sigma_el_radar_rad", rig.uncertainty.sigma_el_radar_rad, ctx);
    read_optional(u, "sigma_r_lidar_m", rig.uncertainty.sigma_r_lidar_m, ctx);
  }

  // The cone apex defaults to the LiDAR mount.
  rig.blindspot.x_l = rig.lidar_mount.x_m;
  rig.blindspot.z_l = rig.lidar_mount.z_m > 0.0 ? rig.lidar_mount.z_m : rig.blindspot.z_l;
  if (j.contains("blindspot")) {
    const auto & b = j.at("blindspot");
    constexpr auto ctx = "rig.blindspot";
    reject_unknown_keys(b, {"x_l_m", "z_l_m", "alpha_l_rad"}, ctx);
    read_optional(b, "x_l_m", rig.blindspot.x_l, ctx);
    read_optional(b, "z_l_m", rig.blindspot.z_l, ctx);
    read_optional(b, "alpha_l_rad", rig.blindspot.alpha_l, ctx);
  }

  if (j.contains("cameras")) {
    for (const auto & c : j.at("cameras")) {
      constexpr auto ctx = "rig.cameras[]";
      reject_unknown_keys(
        c, {"id", "width", "height", "intrinsics", "extrinsics", "depth_sigma_rel"}, ctx);
      CameraCalibration cam;
      cam.id = read_required<std::string>(c, "id", ctx);
      cam.width = read_required<int>(c, "width", ctx);
      cam.height = read_required<int>(c, "height", ctx);
      cam.intrinsics = matrix_from_json<3, 3>(c.at("intrinsics"), "rig.cameras[].intrinsics");
      cam.extrinsics = matrix_from_json<4, 4>(c.at("extrinsics"), "rig.cameras[].extrinsics");
      read_optional(c, "depth_sigma_rel", cam.depth_sigma_rel, ctx);
      rig.cameras.push_back(std::move(cam));
    }
  }

  rig.validate();
  return rig;
}

json rig_to_json(const SensorRig & rig)
{
  json radars = json::array();
  for (const auto & r : rig.radars) {
    radars.push_back({{"id", r.id}, {"mount", mount_to_json(r.mount)}, {"fov_rad", r.fov_rad}});
  }
  json cameras = json::array();
  for (const auto & c : rig.cameras) {
    cameras.push_back({
      {"id", c.id},
      {"width", c.width},
      {"height", c.height},
      {"intrinsics", matrix_to_json(c.intrinsics)},
      {"extrinsics", matrix_to_json(c.extrinsics)},
      {"depth_sigma_rel", c.depth_sigma_rel},
    });
  }
  const auto & u = rig.uncertainty;
  return {
    {"radars", radars},
    {"lidar", {{"mount", mount_to_json(rig.lidar_mount)}}},
    {"uncertainty",
     {{"sigma_r_radar_m", u.sigma_r_radar_m},
      {"sigma_az_radar_rad", u.sigma_az_radar_rad},
      {"sigma_el_radar_rad", u.sigma_el_radar_rad},
      {"sigma_r_lidar_m", u.sigma_r_lidar_m}}},
    {"blindspot",
     {{"x_l_m", rig.blindspot.x_l},
      {"z_l_m", rig.blindspot.z_l},
      {"alpha_l_rad", rig.blindspot.alpha_l}}},
    {"cameras", cameras},
  };
}

SensorRig load_rig(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open calibration file " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error & e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    return rig_from_json(j);
  } catch (const json::exception & e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError & e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_rig(const SensorRig & rig, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write calibration file " + path.string());
  }
  out << rig_to_json(rig).dump(2) << '\n';
}

Eigen::Matrix4d camera_extrinsics(const Eigen::Vector3d & position, double yaw_rad,
                                  double pitch_down_rad)
{
  const double cy = std::cos(yaw_rad);
  const double sy = std::sin(yaw_rad);
  const double cp = std::cos(pitch_down_rad);
  const double sp = std::sin(pitch_down_rad);
  const Eigen::Vector3d forward{cp * cy, cp * sy, -sp};
  const Eigen::Vector3d right{sy, -cy, 0.0};
  const Eigen::Vector3d down = forward.cross(right);

  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();

  Eigen::Matrix4d b = Eigen::Matrix4d::Identity();
  b.topLeftCorner<3, 3>() = r;
  b.topRightCorner<3, 1>() = -r * position;
  return b;
}

}  // namespace ralf

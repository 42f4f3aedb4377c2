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

#include "ralf/camera_match.hpp"

#include "ralf/lidar_match.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ralf
{

void CameraMatchConfig::validate() const
{
  if (k < 1 || !(beta > 0.0) || !(epsilon > 0.0) || grid_step_px < 1 || k_anchors < 1 ||
      stride_px < 1 || holdout_every < 2) {
    throw std::invalid_argument("invalid camera match configuration");
  }
}

ImageProjection project_to_image(const CartesianPoint & p_vehicle, const CameraCalibration & calib)
{
  const Eigen::Vector4d cam = calib.extrinsics * Eigen::Vector4d(p_vehicle.x_m, p_vehicle.y_m, p_vehicle.z_m, 1.0);
  ImageProjection out;
  out.depth_m = cam.z();
  if (!(cam.z() > 0.0)) {
    out.status = ProjectionStatus::kBehindCamera;
    return out;
  }
  const Eigen::Vector3d pix = calib.intrinsics * (cam.head<3>() / cam.z());
  out.u = pix.x();
  out.v = pix.y();
  const bool inside = out.u > -0.5 && out.v > -0.5 && out.u < calib.width - 0.5 &&
                      out.v < calib.height - 0.5;
  out.status = inside ? ProjectionStatus::kVisible : ProjectionStatus::kOutOfBounds;
  return out;
}

CartesianPoint pixel_to_vehicle(double u, double v, double depth_m, const CameraCalibration & calib)
{
  const Eigen::Vector3d ray = calib.intrinsics.inverse() * Eigen::Vector3d(u, v, 1.0);
  const Eigen::Vector3d cam = ray * (depth_m / ray.z());
  const Eigen::Matrix3d r = calib.extrinsics.topLeftCorner<3, 3>();
  const Eigen::Vector3d t = calib.extrinsics.topRightCorner<3, 1>();
  return CartesianPoint::from(r.transpose() * (cam - t));
}

std::vector<DepthAnchor> lidar_anchors(
  std::span<const CartesianPoint> lidar_vehicle, const CameraCalibration & calib)
{
  std::vector<DepthAnchor> out;
  for (const auto & p : lidar_vehicle) {
    const ImageProjection proj = project_to_image(p, calib);
    if (proj.status == ProjectionStatus::kVisible) {
      out.push_back({proj.u, proj.v, proj.depth_m});
    }
  }
  return out;
}

namespace
{

std::vector<int> grid_nodes(int extent, int step)
{
  std::vector<int> nodes;
  for (int x = 0; x < extent; x += step) {
    nodes.push_back(x);
  }
  if (nodes.back() != extent - 1) {
    nodes.push_back(extent - 1);
  }
  return nodes;
}

/// Index i with nodes[i] <= x <= nodes[i + 1] and the fractional position inside it.
std::pair<std::size_t, double> bracket(const std::vector<int> & nodes, int x)
{
  if (nodes.size() == 1) {
    return {0, 0.0};
  }
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(nodes.begin(), it));
  i = std::clamp<std::size_t>(i, 1, nodes.size() - 1) - 1;
  const double t = static_cast<double>(x - nodes[i]) / static_cast<double>(nodes[i + 1] - nodes[i]);
  return {i, t};
}

}  // namespace

std::optional<MetricDepthImage> calibrate_depth_scale(
  const DepthImage & depth, std::span<const DepthAnchor> anchors, int grid_step_px,
  std::size_t k_anchors)
{
  if (depth.width <= 0 || depth.height <= 0 || grid_step_px < 1 || k_anchors < 1) {
    return std::nullopt;
  }

  std::vector<CartesianPoint> anchor_pixels;
  std::vector<double> ratios;
  for (const auto & a : anchors) {
    const auto iu = static_cast<int>(std::lround(a.u));
    const auto iv = static_cast<int>(std::lround(a.v));
    if (iu < 0 || iv < 0 || iu >= depth.width || iv >= depth.height) {
      continue;
    }
    const double rel = depth.at(iu, iv);
    if (!(rel > 0.0) || !(a.metric_depth_m > 0.0)) {
      continue;
    }
    anchor_pixels.push_back({a.u, a.v, 0.0});
    ratios.push_back(a.metric_depth_m / rel);
  }
  if (ratios.empty()) {
    return std::nullopt;
  }
  const KnnIndex index(std::move(anchor_pixels));

  const std::vector<int> xs = grid_nodes(depth.width, grid_step_px);
  const std::vector<int> ys = grid_nodes(depth.height, grid_step_px);
  std::vector<double> node_scale(xs.size() * ys.size());
  for (std::size_t gy = 0; gy < ys.size(); ++gy) {
    for (std::size_t gx = 0; gx < xs.size(); ++gx) {
      const auto nearest = index.knn({double(xs[gx]), double(ys[gy]), 0.0}, k_anchors);
      double sum = 0.0;
      for (const auto & n : nearest) {
        sum += ratios[n.index];
      }
      node_scale[gy * xs.size() + gx] = sum / static_cast<double>(nearest.size());
    }
  }

  MetricDepthImage out;
  out.camera_id = depth.camera_id;
  out.width = depth.width;
  out.height = depth.height;
  out.depth_m.resize(depth.values.size());
  out.scale.resize(depth.values.size());
  for (int v = 0; v < depth.height; ++v) {
    const auto [iy, ty] = bracket(ys, v);
    const std::size_t iy1 = std::min(iy + 1, ys.size() - 1);
    for (int u = 0; u < depth.width; ++u) {
      const auto [ix, tx] = bracket(xs, u);
      const std::size_t ix1 = std::min(ix + 1, xs.size() - 1);
      const double s00 = node_scale[iy * xs.size() + ix];
      const double s10 = node_scale[iy * xs.size() + ix1];
      const double s01 = node_scale[iy1 * xs.size() + ix];
      const double s11 = node_scale[iy1 * xs.size() + ix1];
      const double s = (1.0 - ty) * ((1.0 - tx) * s00 + tx * s10) + ty * ((1.0 - tx) * s01 + tx * s11);
      const std::size_t idx = static_cast<std::size_t>(v) * depth.width + u;
      const double rel = depth.values[idx];
      out.scale[idx] = s;
      out.depth_m[idx] = rel > 0.0 ? rel * s : 0.0;
    }
  }
  return out;
}

std::vector<OpticalPoint> back_project(
  const MetricDepthImage & metric_depth, const CameraCalibration & calib, int stride_px)
{
  std::vector<OpticalPoint> out;
  const Eigen::Vector3d center = calib.center_in_vehicle();
  stride_px = std::max(stride_px, 1);
  for (int v = 0; v < metric_depth.height; v += stride_px) {
    for (int u = 0; u < metric_depth.width; u += stride_px) {
      const double d = metric_depth.depth_at(u, v);
      if (d > 0.0) {
        out.push_back({pixel_to_vehicle(u, v, d, calib), center, calib.depth_sigma_rel});
      }
    }
  }
  return out;
}

namespace
{

std::vector<CartesianPoint> positions(const std::vector<OpticalPoint> & points)
{
  std::vector<CartesianPoint> out;
  out.reserve(points.size());
  for (const auto & p : points) {
    out.push_back(p.position);
  }
  return out;
}

}  // namespace

OpticalCloud::OpticalCloud(std::vector<OpticalPoint> points)
: points_(std::move(points)), index_(positions(points_))
{
}

double camera_distance_variance(
  const RadarDetection & det, const MountingPose & radar_mount, const OpticalPoint & optical,
  const SensorUncertainty & u)
{
  const Eigen::Vector3d h =
    spherical_to_cartesian(det.position, radar_mount).vec() - optical.position.vec();
  const double d = h.norm();
  const Eigen::Vector3d ray = optical.position.vec() - optical.camera_center;
  if (d == 0.0) {
    const double sigma = std::max(u.sigma_r_radar_m, optical.depth_sigma_rel * ray.norm());
    return sigma * sigma;
  }
  // d(point)/d(depth) * sigma_depth = ray * depth_sigma_rel, since the point scales with depth
  // along its ray.
  const double depth_term = -(h / d).dot(ray) * optical.depth_sigma_rel;
  return radar_variance_term(h, det.position, radar_mount, u) + depth_term * depth_term;
}

std::vector<Score> camera_match(
  std::span<const RadarDetection> detections, const OpticalCloud & optical, const SensorRig & rig,
  const CameraMatchConfig & cfg)
{
  std::vector<Score> out(detections.size());
  if (optical.empty()) {
    return out;
  }
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const RadarDetection & det = detections[i];
    const MountingPose & mount = rig.radar_mount(det.sensor_id);
    const CartesianPoint pos = spherical_to_cartesian(det.position, mount);
    const auto neighbors = optical.index().knn(pos, cfg.k);
    double d = 0.0;
    for (const auto & n : neighbors) {
      const double var = camera_distance_variance(det, mount, optical.points()[n.index], rig.uncertainty);
      d += normalized_distance(n.distance_sq, var, cfg.epsilon);
    }
    out[i] = std::max(
      std::exp(-cfg.beta * d / static_cast<double>(neighbors.size())),
      std::numeric_limits<double>::min());
  }
  return out;
}

std::optional<double> consistency_check(
  const MetricDepthImage & metric_depth, std::span<const DepthAnchor> held_out)
{
  std::vector<double> errors;
  for (const auto & a : held_out) {
    const auto iu = static_cast<int>(std::lround(a.u));
    const auto iv = static_cast<int>(std::lround(a.v));
    if (iu < 0 || iv < 0 || iu >= metric_depth.width || iv >= metric_depth.height ||
        !(a.metric_depth_m > 0.0)) {
      continue;
    }
    const double calibrated = metric_depth.depth_at(iu, iv);
    if (!(calibrated > 0.0)) {
      continue;
    }
    errors.push_back(std::abs(calibrated / a.metric_depth_m - 1.0));
  }
  if (errors.empty()) {
    return std::nullopt;
  }
  const std::size_t mid = errors.size() / 2;
  std::nth_element(errors.begin(), errors.begin() + mid, errors.end());
  if (errors.size() % 2 == 1) {
    return errors[mid];
  }
  const double upper = errors[mid];
  const double lower = *std::max_element(errors.begin(), errors.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace ralf

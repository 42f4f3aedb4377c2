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

#ifndef RALF__CAMERA_MATCH_HPP_
#define RALF__CAMERA_MATCH_HPP_

#include "ralf/core.hpp"
#include "ralf/geometry.hpp"
#include "ralf/rig.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ralf
{

/// Relative (scale-free) depth image, row-major. Nonpositive samples mean "no estimate".
struct DepthImage
{
  std::string camera_id;
  int width{0};
  int height{0};
  std::vector<double> values;

  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
};

/// Depth image rescaled to meters, together with the per-pixel scale that produced it.
struct MetricDepthImage
{
  std::string camera_id;
  int width{0};
  int height{0};
  std::vector<double> depth_m;
  std::vector<double> scale;

  double depth_at(int u, int v) const { return depth_m[static_cast<std::size_t>(v) * width + u]; }
  double scale_at(int u, int v) const { return scale[static_cast<std::size_t>(v) * width + u]; }
};

/// Source of relative depth images; stands in for a monocular depth network.
class DepthProvider
{
public:
  virtual ~DepthProvider() = default;
  virtual std::optional<DepthImage> depth(const std::string & camera_id, Timestamp ts) const = 0;
  /// Providers that return false are called from one thread at a time.
  virtual bool thread_safe() const { return true; }
};

enum class ProjectionStatus { kVisible, kBehindCamera, kOutOfBounds };

struct ImageProjection
{
  ProjectionStatus status{ProjectionStatus::kBehindCamera};
  double u{0.0};
  double v{0.0};
  double depth_m{0.0};
};

/// Pinhole projection; pixel centers sit at integer coordinates.
ImageProjection project_to_image(const CartesianPoint & p_vehicle, const CameraCalibration & calib);

/// Vehicle-frame point seen at pixel (u, v) with optical depth `depth_m`.
CartesianPoint pixel_to_vehicle(double u, double v, double depth_m, const CameraCalibration & calib);

struct DepthAnchor
{
  double u{0.0};
  double v{0.0};
  double metric_depth_m{0.0};
};

/// Projects LiDAR points (vehicle frame) into the image and keeps the visible ones as anchors.
std::vector<DepthAnchor> lidar_anchors(
  std::span<const CartesianPoint> lidar_vehicle, const CameraCalibration & calib);

/// Local metric rescaling. Each grid node takes the mean metric/relative ratio of its
/// k nearest anchors in pixel space; pixels interpolate bilinearly between nodes.
/// Returns std::nullopt when no usable anchor remains.
std::optional<MetricDepthImage> calibrate_depth_scale(
  const DepthImage & depth, std::span<const DepthAnchor> anchors, int grid_step_px,
  std::size_t k_anchors);

struct OpticalPoint
{
  CartesianPoint position;
  Eigen::Vector3d camera_center{Eigen::Vector3d::Zero()};
  double depth_sigma_rel{0.1};
};

std::vector<OpticalPoint> back_project(
  const MetricDepthImage & metric_depth, const CameraCalibration & calib, int stride_px);

class OpticalCloud
{
public:
  OpticalCloud() = default;
  explicit OpticalCloud(std::vector<OpticalPoint> points);

  const KnnIndex & index() const { return index_; }
  const std::vector<OpticalPoint> & points() const { return points_; }
  bool empty() const { return points_.empty(); }

private:
  std::vector<OpticalPoint> points_;
  KnnIndex index_;
};

struct CameraMatchConfig
{
  std::size_t k{3};
  double beta{0.25};
  double epsilon{1e-3};
  int grid_step_px{16};
  std::size_t k_anchors{4};
  int stride_px{4};
  double consistency_threshold{0.5};
  /// Every n-th projected LiDAR anchor is held out for the consistency check.
  std::size_t holdout_every{5};

  void validate() const;
};

/// sigma_d^2 between a radar detection and an optical point: the three radar terms plus the
/// depth-estimate term, proportional to depth and directed along the camera ray.
double camera_distance_variance(
  const RadarDetection & det, const MountingPose & radar_mount, const OpticalPoint & optical,
  const SensorUncertainty & u);

/// Same structure as lidar_match against the back-projected camera points.
std::vector<Score> camera_match(
  std::span<const RadarDetection> detections, const OpticalCloud & optical, const SensorRig & rig,
  const CameraMatchConfig & cfg);

/// Median absolute relative error of the calibrated depth at held-out anchors.
std::optional<double> consistency_check(
  const MetricDepthImage & metric_depth, std::span<const DepthAnchor> held_out);

}  // namespace ralf

#endif  // RALF__CAMERA_MATCH_HPP_

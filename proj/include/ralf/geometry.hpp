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

#ifndef RALF__GEOMETRY_HPP_
#define RALF__GEOMETRY_HPP_

#include "ralf/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ralf
{

struct Neighbor
{
  std::size_t index{0};
  double distance_sq{0.0};

  friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

/// Exact k-d tree over a fixed point set. Results are ordered by (distance, original index),
/// so equidistant points are reported lowest index first.
class KnnIndex
{
public:
  KnnIndex() = default;
  explicit KnnIndex(std::vector<CartesianPoint> points);

  /// Returns min(k, size()) neighbors; an empty index yields an empty result.
  std::vector<Neighbor> knn(const CartesianPoint & query, std::size_t k) const;

  /// All points with squared distance <= radius^2, same ordering as knn().
  std::vector<Neighbor> within_radius(const CartesianPoint & query, double radius_m) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<CartesianPoint> & points() const { return points_; }

private:
  struct Node
  {
    std::uint32_t begin{0};
    std::uint32_t end{0};
    std::int32_t left{-1};
    std::int32_t right{-1};
    int axis{0};
    double split{0.0};
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search_knn(std::int32_t node, const Eigen::Vector3d & q, std::size_t k,
                  std::vector<Neighbor> & heap) const;
  void search_radius(std::int32_t node, const Eigen::Vector3d & q, double radius_sq,
                     std::vector<Neighbor> & out) const;

  std::vector<CartesianPoint> points_;
  std::vector<Eigen::Vector3d> coords_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

KnnIndex build_knn_index(std::vector<CartesianPoint> points);

/// Plane n.p = offset_m with n pointing up (n_z >= 0).
struct GroundPlane
{
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double offset_m{0.0};
  std::size_t inlier_count{0};

  double signed_distance(const CartesianPoint & p) const { return normal.dot(p.vec()) - offset_m; }
};

struct GroundFilterConfig
{
  int iterations{200};
  double inlier_threshold_m{0.1};
  double margin_m{0.3};
  std::uint64_t seed{0};
};

/// RANSAC over minimal three-point samples. Returns std::nullopt for fewer than three points
/// or when every sample is degenerate.
std::optional<GroundPlane> fit_ground_plane(
  std::span<const CartesianPoint> points, int iterations, double inlier_threshold_m,
  std::uint64_t seed = 0);

/// keep[i] is true iff point i lies more than margin_m above the plane. Without a plane
/// nothing is filtered.
std::vector<bool> filter_ground_radar(
  std::span<const CartesianPoint> radar_points, const std::optional<GroundPlane> & plane,
  double margin_m);

/// (h_x, h_y, h_z): radar minus LiDAR position in the vehicle frame.
Eigen::Vector3d mismatch_components(
  const SphericalPoint & radar, const MountingPose & radar_mount, const SphericalPoint & lidar,
  const MountingPose & lidar_mount);

/// Partial derivatives of d = |h| with respect to the four measured coordinates that enter the
/// propagated distance uncertainty. Undefined (all zero) at d = 0.
struct DistancePartials
{
  double distance{0.0};
  double d_range_radar{0.0};
  double d_azimuth_radar{0.0};
  double d_elevation_radar{0.0};
  double d_range_lidar{0.0};
};

DistancePartials distance_partials(
  const SphericalPoint & radar, const MountingPose & radar_mount, const SphericalPoint & lidar,
  const MountingPose & lidar_mount);

/// First-order propagated standard deviation of the radar-LiDAR distance. At d = 0 the
/// partials do not exist and the larger range sigma is returned instead.
double propagate_distance_sigma(
  const SphericalPoint & radar, const MountingPose & radar_mount, const SphericalPoint & lidar,
  const MountingPose & lidar_mount, const SensorUncertainty & u);

double propagate_distance_sigma(
  const SphericalPoint & radar, const SphericalPoint & lidar, const SensorUncertainty & u);

/// Radar-side contribution to sigma_d^2 for a mismatch vector h (radar minus reference).
double radar_variance_term(
  const Eigen::Vector3d & h, const SphericalPoint & radar, const MountingPose & radar_mount,
  const SensorUncertainty & u);

}  // namespace ralf

#endif  // RALF__GEOMETRY_HPP_

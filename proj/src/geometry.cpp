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

#include "ralf/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ralf
{

namespace
{

constexpr std::uint32_t kLeafSize = 12;

bool closer(const Neighbor & a, const Neighbor & b)
{
  return a.distance_sq < b.distance_sq ||
         (a.distance_sq == b.distance_sq && a.index < b.index);
}

double squared_distance(const Eigen::Vector3d & a, const Eigen::Vector3d & b)
{
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

KnnIndex::KnnIndex(std::vector<CartesianPoint> points) : points_(std::move(points))
{
  coords_.reserve(points_.size());
  for (const auto & p : points_) {
    coords_.push_back(p.vec());
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0U);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KnnIndex::build(std::uint32_t begin, std::uint32_t end)
{
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) {
    return id;
  }

  Eigen::Vector3d lo = coords_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(coords_[order_[i]]);
    hi = hi.cwiseMax(coords_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(
    order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
    [&](std::uint32_t a, std::uint32_t b) {
      const double ca = coords_[a][axis];
      const double cb = coords_[b][axis];
      return ca < cb || (ca == cb && a < b);
    });

  const double split = coords_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KnnIndex::search_knn(
  std::int32_t node_id, const Eigen::Vector3d & q, std::size_t k, std::vector<Neighbor> & heap) const
{
  const Node & node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Neighbor candidate{order_[i], squared_distance(q, coords_[order_[i]])};
      if (heap.size() < k) {
        heap.push_back(candidate);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(candidate, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = candidate;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }

  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search_knn(near, q, k, heap);
  // Equality keeps the far side in play so equidistant lower-index points are not skipped.
  if (heap.size() < k || diff * diff <= heap.front().distance_sq) {
    search_knn(far, q, k, heap);
  }
}

std::vector<Neighbor> KnnIndex::knn(const CartesianPoint & query, std::size_t k) const
{
  std::vector<Neighbor> heap;
  if (points_.empty() || k == 0) {
    return heap;
  }
  k = std::min(k, points_.size());
  heap.reserve(k + 1);
  search_knn(0, query.vec(), k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KnnIndex::search_radius(
  std::int32_t node_id, const Eigen::Vector3d & q, double radius_sq, std::vector<Neighbor> & out) const
{
  const Node & node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(q, coords_[order_[i]]);
      if (d2 <= radius_sq) {
        out.push_back({order_[i], d2});
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  if (diff <= 0.0 || diff * diff <= radius_sq) {
    search_radius(node.left, q, radius_sq, out);
  }
  if (diff >= 0.0 || diff * diff <= radius_sq) {
    search_radius(node.right, q, radius_sq, out);
  }
}

std::vector<Neighbor> KnnIndex::within_radius(const CartesianPoint & query, double radius_m) const
{
  std::vector<Neighbor> out;
  if (points_.empty() || radius_m < 0.0) {
    return out;
  }
  search_radius(0, query.vec(), radius_m * radius_m, out);
  std::sort(out.begin(), out.end(), closer);
  return out;
}

KnnIndex build_knn_index(std::vector<CartesianPoint> points)
{
  return KnnIndex(std::move(points));
}

std::optional<GroundPlane> fit_ground_plane(
  std::span<const CartesianPoint> points, int iterations, double inlier_threshold_m,
  std::uint64_t seed)
{
  if (points.size() < 3 || iterations <= 0) {
    return std::nullopt;
  }

  std::mt19937_64 rng(seed);
  const std::uint64_t n = points.size();
  std::optional<GroundPlane> best;

  int accepted = 0;
  const int max_attempts = iterations * 10;
  for (int attempt = 0; attempt < max_attempts && accepted < iterations; ++attempt) {
    const std::uint64_t i0 = rng() % n;
    const std::uint64_t i1 = rng() % n;
    const std::uint64_t i2 = rng() % n;
    if (i0 == i1 || i1 == i2 || i0 == i2) {
      continue;
    }
    const Eigen::Vector3d a = points[i0].vec();
    Eigen::Vector3d normal = (points[i1].vec() - a).cross(points[i2].vec() - a);
    const double norm = normal.norm();
    if (!(norm > 1e-12)) {
      continue;  // collinear sample
    }
    ++accepted;
    normal /= norm;
    if (normal.z() < 0.0) {
      normal = -normal;
    }
    const double offset = normal.dot(a);

    std::size_t inliers = 0;
    for (const auto & p : points) {
      if (std::abs(normal.dot(p.vec()) - offset) <= inlier_threshold_m) {
        ++inliers;
      }
    }
    if (!best || inliers > best->inlier_count) {
      best = GroundPlane{normal, offset, inliers};
    }
  }
  return best;
}

std::vector<bool> filter_ground_radar(
  std::span<const CartesianPoint> radar_points, const std::optional<GroundPlane> & plane,
  double margin_m)
{
  std::vector<bool> keep(radar_points.size(), true);
  if (!plane) {
    return keep;
  }
  for (std::size_t i = 0; i < radar_points.size(); ++i) {
    keep[i] = plane->signed_distance(radar_points[i]) > margin_m;
  }
  return keep;
}

Eigen::Vector3d mismatch_components(
  const SphericalPoint & radar, const MountingPose & radar_mount, const SphericalPoint & lidar,
  const MountingPose & lidar_mount)
{
  return spherical_to_cartesian(radar, radar_mount).vec() -
         spherical_to_cartesian(lidar, lidar_mount).vec();
}

DistancePartials distance_partials(
  const SphericalPoint & radar, const MountingPose & radar_mount, const SphericalPoint & lidar,
  const MountingPose & lidar_mount)
{
  const Eigen::Vector3d h = mismatch_components(radar, radar_mount, lidar, lidar_mount);
  DistancePartials out;
  out.distance = h.norm();
  if (out.distance == 0.0) {
    return out;
  }
  const Eigen::Vector3d unit = h / out.distance;
  const SphericalJacobian jr = spherical_jacobian(radar, radar_mount);
  const SphericalJacobian jl = spherical_jacobian(lidar, lidar_mount);
  out.d_range_radar = unit.dot(jr.d_range);
  out.d_azimuth_radar = unit.dot(jr.d_azimuth);
  out.d_elevation_radar = unit.dot(jr.d_elevation);
  out.d_range_lidar = -unit.dot(jl.d_range);
  return out;
}

double radar_variance_term(
  const Eigen::Vector3d & h, const SphericalPoint & radar, const MountingPose & radar_mount,
  const SensorUncertainty & u)
{
  const double d = h.norm();
  if (d == 0.0) {
    return 0.0;
  }
  const Eigen::Vector3d unit = h / d;
  const SphericalJacobian j = spherical_jacobian(radar, radar_mount);
  const double dr = unit.dot(j.d_range) * u.sigma_r_radar_m;
  const double da = unit.dot(j.d_azimuth) * u.sigma_az_radar_rad;
  const double de = unit.dot(j.d_elevation) * u.sigma_el_radar_rad;
  return dr * dr + da * da + de * de;
}

double propagate_distance_sigma(
  const SphericalPoint & radar, const MountingPose & radar_mount, const SphericalPoint & lidar,
  const MountingPose & lidar_mount, const SensorUncertainty & u)
{
  const DistancePartials p = distance_partials(radar, radar_mount, lidar, lidar_mount);
  if (p.distance == 0.0) {
    return std::max(u.sigma_r_radar_m, u.sigma_r_lidar_m);
  }
  const double a = p.d_range_radar * u.sigma_r_radar_m;
  const double b = p.d_azimuth_radar * u.sigma_az_radar_rad;
  const double c = p.d_elevation_radar * u.sigma_el_radar_rad;
  const double e = p.d_range_lidar * u.sigma_r_lidar_m;
  return std::sqrt(a * a + b * b + c * c + e * e);
}

double propagate_distance_sigma(
  const SphericalPoint & radar, const SphericalPoint & lidar, const SensorUncertainty & u)
{
  return propagate_distance_sigma(radar, MountingPose{}, lidar, MountingPose{}, u);
}

}  // namespace ralf

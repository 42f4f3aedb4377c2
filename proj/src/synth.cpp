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

#include "ralf/synth.hpp"

#include "json_util.hpp"
#include "ralf/tracking.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace ralf::synth
{

namespace
{

using Eigen::Vector2d;
using Eigen::Vector3d;

constexpr double kDeg = kPi / 180.0;
constexpr double kRayEps = 1e-9;

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed ^ 0x5eedULL) ^ a) ^ b) ^ c);
}

enum Stream : std::uint64_t { kRadarStream = 1, kLidarStream = 2, kDepthStream = 3, kScaleStream = 4 };

double cross2(const Vector2d & a, const Vector2d & b) { return a.x() * b.y() - a.y() * b.x(); }

double uniform(std::mt19937_64 & rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(std::mt19937_64 & rng, double sigma)
{
  return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
}

Vector2d to_vec2(const nlohmann::json & j, std::string_view ctx)
{
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw DataError(std::string(ctx) + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

// Transform from the vehicle frame at `ego` into the world frame.
Vector3d vehicle_to_world(const Vector3d & p, const VehicleState & ego)
{
  return yaw_rotation(ego.yaw_rad) * p + Vector3d(ego.x_m, ego.y_m, 0.0);
}

Vector3d world_to_vehicle(const Vector3d & p, const VehicleState & ego)
{
  return yaw_rotation(ego.yaw_rad).transpose() * (p - Vector3d(ego.x_m, ego.y_m, 0.0));
}

Vector3d local_direction(double azimuth, double elevation)
{
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

// Bounding circle of an object's footprint, for cheap ray rejection.
struct Bound
{
  Vector2d center;
  double radius;
};

Bound bound_of(const SceneObject & o)
{
  switch (o.kind) {
    case ObjectKind::kWall:
      return {0.5 * (o.a + o.b), 0.5 * (o.b - o.a).norm() + 1e-6};
    case ObjectKind::kBox:
      return {o.a, 0.5 * o.size_m.norm() + 1e-6};
    case ObjectKind::kPole:
    case ObjectKind::kVegetation:
      return {o.a, o.radius_m + 1e-6};
  }
  return {o.a, 0.0};
}

std::optional<double> hit_wall(const SceneObject & o, const Vector3d & org, const Vector3d & d)
{
  const Vector2d e = o.b - o.a;
  const Vector2d d2 = d.head<2>();
  const double denom = cross2(d2, e);
  if (std::abs(denom) < 1e-15) {
    return std::nullopt;
  }
  const Vector2d w = o.a - org.head<2>();
  const double t = cross2(w, e) / denom;
  const double s = cross2(w, d2) / denom;
  if (t <= kRayEps || s < 0.0 || s > 1.0) {
    return std::nullopt;
  }
  const double z = org.z() + t * d.z();
  if (z < 0.0 || z > o.height_m) {
    return std::nullopt;
  }
  return t;
}

// Closed vertical cylinder of the given radius on [0, height].
std::optional<double> hit_cylinder(
  const Vector2d & c, double radius, double height, const Vector3d & org, const Vector3d & d)
{
  std::optional<double> best;
  const Vector2d f = org.head<2>() - c;
  const Vector2d d2 = d.head<2>();
  const double a = d2.squaredNorm();
  if (a > 0.0) {
    const double b = 2.0 * f.dot(d2);
    const double cc = f.squaredNorm() - radius * radius;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = org.z() + t * d.z();
      if (t > kRayEps && z >= 0.0 && z <= height) {
        best = t;
      }
    }
  }
  if (d.z() < 0.0 && org.z() > height) {
    const double t = (height - org.z()) / d.z();
    if ((org.head<2>() + t * d2 - c).squaredNorm() <= radius * radius && (!best || t < *best)) {
      best = t;
    }
  }
  return best;
}

std::optional<double> hit_box(const SceneObject & o, const Vector3d & org, const Vector3d & d)
{
  const Eigen::Rotation2Dd inv(-o.yaw_rad);
  const Vector2d lo2 = inv * (org.head<2>() - o.a);
  const Vector2d ld2 = inv * d.head<2>();
  const Vector3d lo(lo2.x(), lo2.y(), org.z());
  const Vector3d ld(ld2.x(), ld2.y(), d.z());
  const Vector3d lower(-0.5 * o.size_m.x(), -0.5 * o.size_m.y(), 0.0);
  const Vector3d upper(0.5 * o.size_m.x(), 0.5 * o.size_m.y(), o.height_m);
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (ld[i] == 0.0) {
      if (lo[i] < lower[i] || lo[i] > upper[i]) {
        return std::nullopt;
      }
      continue;
    }
    double t0 = (lower[i] - lo[i]) / ld[i];
    double t1 = (upper[i] - lo[i]) / ld[i];
    if (t0 > t1) {
      std::swap(t0, t1);
    }
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_near <= kRayEps) {
    return std::nullopt;
  }
  return t_near;
}

double segment_rect_distance(const SceneObject & o, const Vector3d & p)
{
  const Vector2d e = o.b - o.a;
  const double len_sq = e.squaredNorm();
  const double s = len_sq > 0.0 ? std::clamp((p.head<2>() - o.a).dot(e) / len_sq, 0.0, 1.0) : 0.0;
  const double horizontal = (p.head<2>() - (o.a + s * e)).norm();
  const double vertical = std::max({p.z() - o.height_m, -p.z(), 0.0});
  return std::hypot(horizontal, vertical);
}

double cylinder_distance(const Vector2d & c, double radius, double height, const Vector3d & p)
{
  const double r = (p.head<2>() - c).norm();
  const double z = p.z();
  if (r <= radius && z >= 0.0 && z <= height) {
    return std::min({radius - r, height - z, z});
  }
  const double dr = std::max(r - radius, 0.0);
  const double dz = std::max({z - height, -z, 0.0});
  return std::hypot(dr, dz);
}

double box_distance(const SceneObject & o, const Vector3d & p)
{
  const Vector2d q2 = Eigen::Rotation2Dd(-o.yaw_rad) * (p.head<2>() - o.a);
  const Vector3d q(std::abs(q2.x()), std::abs(q2.y()), std::abs(p.z() - 0.5 * o.height_m));
  const Vector3d half(0.5 * o.size_m.x(), 0.5 * o.size_m.y(), 0.5 * o.height_m);
  const Vector3d excess = q - half;
  const double outside = excess.cwiseMax(0.0).norm();
  const double inside = std::min(excess.maxCoeff(), 0.0);
  return std::abs(outside + inside);
}

ObjectKind kind_from_string(const std::string & s)
{
  if (s == "wall") return ObjectKind::kWall;
  if (s == "pole") return ObjectKind::kPole;
  if (s == "box") return ObjectKind::kBox;
  if (s == "vegetation") return ObjectKind::kVegetation;
  throw DataError("scene object: unknown type '" + s + "'");
}

SceneObject object_from_json(const nlohmann::json & j)
{
  constexpr std::string_view ctx = "scene object";
  detail::reject_unknown_keys(
    j, {"type", "cluster", "from", "to", "center", "radius_m", "size_m", "yaw_rad", "height_m", "jitter"},
    ctx);
  SceneObject o;
  o.kind = kind_from_string(detail::read_required<std::string>(j, "type", ctx));
  switch (o.kind) {
    case ObjectKind::kWall:
      o.cluster = ClusterLabel::kConstruction;
      break;
    case ObjectKind::kPole:
      o.cluster = ClusterLabel::kPoles;
      o.radius_m = 0.15;
      o.height_m = 4.0;
      break;
    case ObjectKind::kBox:
      o.cluster = ClusterLabel::kVehicle;
      o.height_m = 1.5;
      break;
    case ObjectKind::kVegetation:
      o.cluster = ClusterLabel::kVegetation;
      o.radius_m = 1.0;
      o.height_m = 1.5;
      break;
  }
  if (j.contains("cluster")) {
    const auto name = detail::read_required<std::string>(j, "cluster", ctx);
    const auto c = cluster_from_string(name);
    if (!c) {
      throw DataError("scene object: unknown cluster '" + name + "'");
    }
    o.cluster = *c;
  }
  if (o.kind == ObjectKind::kWall) {
    o.a = to_vec2(detail::read_required<nlohmann::json>(j, "from", ctx), "wall.from");
    o.b = to_vec2(detail::read_required<nlohmann::json>(j, "to", ctx), "wall.to");
    if ((o.b - o.a).norm() <= 0.0) {
      throw DataError("wall endpoints coincide");
    }
  } else {
    o.a = to_vec2(detail::read_required<nlohmann::json>(j, "center", ctx), "object.center");
  }
  detail::read_optional(j, "radius_m", o.radius_m, ctx);
  detail::read_optional(j, "yaw_rad", o.yaw_rad, ctx);
  detail::read_optional(j, "height_m", o.height_m, ctx);
  detail::read_optional(j, "jitter", o.jitter, ctx);
  if (j.contains("size_m")) {
    o.size_m = to_vec2(j.at("size_m"), "box.size_m");
  }
  if (!(o.height_m > 0.0) || !(o.radius_m > 0.0) || !(o.size_m.minCoeff() > 0.0) ||
      !(o.jitter >= 0.0 && o.jitter < 1.0)) {
    throw DataError("scene object: dimensions must be positive and jitter in [0, 1)");
  }
  return o;
}

SequenceSpec sequence_from_json(const nlohmann::json & j)
{
  constexpr std::string_view ctx = "sequence";
  detail::reject_unknown_keys(j, {"id", "frame_count", "start", "trajectory"}, ctx);
  SequenceSpec s;
  s.id = detail::read_required<std::string>(j, "id", ctx);
  s.frame_count = detail::read_required<int>(j, "frame_count", ctx);
  if (s.id.empty() || s.id.find_first_of("/\\") != std::string::npos) {
    throw DataError("sequence id must be a plain directory name");
  }
  if (j.contains("start")) {
    const auto & st = j.at("start");
    detail::reject_unknown_keys(st, {"x_m", "y_m", "yaw_rad"}, "sequence.start");
    detail::read_optional(st, "x_m", s.start.x_m, ctx);
    detail::read_optional(st, "y_m", s.start.y_m, ctx);
    detail::read_optional(st, "yaw_rad", s.start.yaw_rad, ctx);
  }
  for (const auto & seg : detail::read_required<nlohmann::json>(j, "trajectory", ctx)) {
    detail::reject_unknown_keys(seg, {"t_s", "speed_mps", "yaw_rate_radps"}, "trajectory segment");
    TrajectorySegment t;
    detail::read_optional(seg, "t_s", t.t_s, ctx);
    detail::read_optional(seg, "speed_mps", t.speed_mps, ctx);
    detail::read_optional(seg, "yaw_rate_radps", t.yaw_rate_radps, ctx);
    s.trajectory.push_back(t);
  }
  std::sort(s.trajectory.begin(), s.trajectory.end(),
            [](const TrajectorySegment & a, const TrajectorySegment & b) { return a.t_s < b.t_s; });
  return s;
}

double deg_or_rad(const nlohmann::json & j, const char * key_deg, double fallback_rad)
{
  const auto it = j.find(key_deg);
  return it == j.end() ? fallback_rad : it->get<double>() * kDeg;
}

CameraCalibration make_camera(
  const std::string & id, const Vector3d & position, double yaw, double pitch_down)
{
  CameraCalibration cam;
  cam.id = id;
  cam.width = 160;
  cam.height = 120;
  cam.intrinsics << 80.0, 0.0, 79.5, 0.0, 80.0, 59.5, 0.0, 0.0, 1.0;
  cam.extrinsics = camera_extrinsics(position, yaw, pitch_down);
  cam.depth_sigma_rel = 0.1;
  return cam;
}

void write_text(const fs::path & path, std::string_view content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
}

}  // namespace

std::string_view to_string(DetectionOrigin o)
{
  switch (o) {
    case DetectionOrigin::kSurface:
      return "surface";
    case DetectionOrigin::kIntraObject:
      return "intra_object";
    case DetectionOrigin::kMirrorGhost:
      return "mirror_ghost";
    case DetectionOrigin::kClutter:
      return "clutter";
    case DetectionOrigin::kGround:
      return "ground";
  }
  return "clutter";
}

SensorRig default_rig(const LidarModel & lidar)
{
  SensorRig rig;
  const double fov = 160.0 * kDeg;
  rig.radars = {
    {"front_left", {3.6, 0.8, 0.6, 40.0 * kDeg}, fov},
    {"front_right", {3.6, -0.8, 0.6, -40.0 * kDeg}, fov},
    {"rear_left", {-0.8, 0.8, 0.6, 140.0 * kDeg}, fov},
    {"rear_right", {-0.8, -0.8, 0.6, -140.0 * kDeg}, fov},
  };
  rig.lidar_mount = {1.2, 0.0, 1.9, 0.0};
  rig.uncertainty = {0.1, 0.0175, 0.01, 0.03};
  rig.blindspot = {rig.lidar_mount.x_m, rig.lidar_mount.z_m, -lidar.min_elevation_rad};
  rig.cameras = {
    make_camera("front", {3.8, 0.0, 0.8}, 0.0, 20.0 * kDeg),
    make_camera("rear", {-1.0, 0.0, 0.9}, kPi, 20.0 * kDeg),
    make_camera("left", {2.0, 0.95, 1.0}, 90.0 * kDeg, 30.0 * kDeg),
    make_camera("right", {2.0, -0.95, 1.0}, -90.0 * kDeg, 30.0 * kDeg),
  };
  return rig;
}

SceneSpec scene_from_json(const nlohmann::json & j)
{
  constexpr std::string_view ctx = "scene";
  detail::reject_unknown_keys(
    j,
    {"seed", "frame_period_s", "start_ns", "clutter_rate", "mirror_artifact_rate", "intra_object_rate",
     "ground_return_rate", "write_depth", "lidar", "radar", "rig", "depth_scales", "objects", "sequences"},
    ctx);
  SceneSpec s;
  detail::read_optional(j, "seed", s.seed, ctx);
  detail::read_optional(j, "frame_period_s", s.frame_period_s, ctx);
  detail::read_optional(j, "start_ns", s.start_ns, ctx);
  detail::read_optional(j, "clutter_rate", s.clutter_rate, ctx);
  detail::read_optional(j, "mirror_artifact_rate", s.mirror_artifact_rate, ctx);
  detail::read_optional(j, "intra_object_rate", s.intra_object_rate, ctx);
  detail::read_optional(j, "ground_return_rate", s.ground_return_rate, ctx);
  detail::read_optional(j, "write_depth", s.write_depth, ctx);

  if (j.contains("lidar")) {
    const auto & l = j.at("lidar");
    detail::reject_unknown_keys(
      l, {"channels", "min_elevation_deg", "max_elevation_deg", "azimuth_step_deg", "max_range_m"}, "scene.lidar");
    detail::read_optional(l, "channels", s.lidar.channels, ctx);
    s.lidar.min_elevation_rad = deg_or_rad(l, "min_elevation_deg", s.lidar.min_elevation_rad);
    s.lidar.max_elevation_rad = deg_or_rad(l, "max_elevation_deg", s.lidar.max_elevation_rad);
    s.lidar.azimuth_step_rad = deg_or_rad(l, "azimuth_step_deg", s.lidar.azimuth_step_rad);
    detail::read_optional(l, "max_range_m", s.lidar.max_range_m, ctx);
  }
  if (j.contains("radar")) {
    const auto & r = j.at("radar");
    detail::reject_unknown_keys(
      r,
      {"rays_per_sensor", "max_range_m", "min_elevation_deg", "max_elevation_deg", "clutter_elevation_deg",
       "detection_probability"},
      "scene.radar");
    detail::read_optional(r, "rays_per_sensor", s.radar.rays_per_sensor, ctx);
    detail::read_optional(r, "max_range_m", s.radar.max_range_m, ctx);
    s.radar.min_elevation_rad = deg_or_rad(r, "min_elevation_deg", s.radar.min_elevation_rad);
    s.radar.max_elevation_rad = deg_or_rad(r, "max_elevation_deg", s.radar.max_elevation_rad);
    s.radar.clutter_elevation_rad = deg_or_rad(r, "clutter_elevation_deg", s.radar.clutter_elevation_rad);
    detail::read_optional(r, "detection_probability", s.radar.detection_probability, ctx);
  }
  s.rig = j.contains("rig") ? rig_from_json(j.at("rig")) : default_rig(s.lidar);

  if (j.contains("objects")) {
    for (const auto & o : j.at("objects")) {
      s.objects.push_back(object_from_json(o));
    }
  }
  if (j.contains("sequences")) {
    for (const auto & q : j.at("sequences")) {
      s.sequences.push_back(sequence_from_json(q));
    }
  }

  if (s.lidar.channels < 1 || !(s.lidar.azimuth_step_rad > 0.0) || !(s.lidar.max_range_m > 0.0) ||
      s.radar.rays_per_sensor < 0 || !(s.radar.max_range_m > 1.0) || !(s.frame_period_s > 0.0) ||
      !(s.clutter_rate >= 0.0) || !(s.ground_return_rate >= 0.0) ||
      !(s.mirror_artifact_rate >= 0.0 && s.mirror_artifact_rate <= 1.0) ||
      !(s.intra_object_rate >= 0.0 && s.intra_object_rate <= 1.0) ||
      !(s.radar.detection_probability >= 0.0 && s.radar.detection_probability <= 1.0)) {
    throw DataError("scene: sensor model or rates out of range");
  }

  auto scales = stream(s.seed, kScaleStream, 0, 0);
  for (const auto & cam : s.rig.cameras) {
    const double drawn = std::exp(uniform(scales, std::log(0.2), std::log(5.0)));
    s.depth_scales.emplace(cam.id, drawn);
  }
  if (j.contains("depth_scales")) {
    for (const auto & [id, value] : j.at("depth_scales").items()) {
      if (!value.is_number() || !(value.get<double>() > 0.0)) {
        throw DataError("scene.depth_scales." + id + ": expected a positive number");
      }
      s.depth_scales[id] = value.get<double>();
    }
  }
  return s;
}

SceneSpec load_scene_spec(const fs::path & path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error & e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

SceneSimulator::SceneSimulator(SceneSpec spec) : spec_(std::move(spec))
{
  if (spec_.objects.empty()) {
    throw DataError("scene has no objects");
  }
  if (spec_.sequences.empty()) {
    throw DataError("scene has no sequences");
  }
  for (const auto & seq : spec_.sequences) {
    if (seq.frame_count < 1) {
      throw DataError("sequence '" + seq.id + "' has no frames");
    }
  }
  spec_.rig.validate();
}

double SceneSimulator::depth_scale(const std::string & camera_id) const
{
  const auto it = spec_.depth_scales.find(camera_id);
  return it == spec_.depth_scales.end() ? 1.0 : it->second;
}

std::optional<Hit> SceneSimulator::raycast(
  const Vector3d & origin, const Vector3d & direction, double max_range, std::mt19937_64 & rng) const
{
  const Vector3d d = direction.normalized();
  std::optional<Hit> best;
  auto consider = [&](std::optional<double> t, int id) {
    if (t && *t <= max_range && (!best || *t < best->range_m)) {
      best = Hit{*t, id};
    }
  };
  if (d.z() < 0.0 && origin.z() > 0.0) {
    consider(-origin.z() / d.z(), -1);
  }
  const Vector2d d2 = d.head<2>();
  const double d2_sq = d2.squaredNorm();
  for (std::size_t i = 0; i < spec_.objects.size(); ++i) {
    const SceneObject & o = spec_.objects[i];
    // Vegetation draws its radius for every ray, hit or not, so the stream stays aligned.
    const double shrink = o.kind == ObjectKind::kVegetation ? uniform(rng, 0.0, o.jitter) : 0.0;
    const Bound bound = bound_of(o);
    const Vector2d f = bound.center - origin.head<2>();
    if (d2_sq > 0.0) {
      const double along = f.dot(d2) / d2_sq;
      const Vector2d closest = f - std::max(along, 0.0) * d2;
      if (closest.squaredNorm() > bound.radius * bound.radius) {
        continue;
      }
    } else if (f.squaredNorm() > bound.radius * bound.radius) {
      continue;
    }
    const int id = static_cast<int>(i);
    switch (o.kind) {
      case ObjectKind::kWall:
        consider(hit_wall(o, origin, d), id);
        break;
      case ObjectKind::kPole:
        consider(hit_cylinder(o.a, o.radius_m, o.height_m, origin, d), id);
        break;
      case ObjectKind::kBox:
        consider(hit_box(o, origin, d), id);
        break;
      case ObjectKind::kVegetation:
        consider(hit_cylinder(o.a, o.radius_m * (1.0 - shrink), o.height_m, origin, d), id);
        break;
    }
  }
  return best;
}

double SceneSimulator::surface_distance(const Vector3d & p, int id) const
{
  if (id < 0) {
    return std::abs(p.z());
  }
  const SceneObject & o = spec_.objects.at(static_cast<std::size_t>(id));
  switch (o.kind) {
    case ObjectKind::kWall:
      return segment_rect_distance(o, p);
    case ObjectKind::kPole:
      return cylinder_distance(o.a, o.radius_m, o.height_m, p);
    case ObjectKind::kBox:
      return box_distance(o, p);
    case ObjectKind::kVegetation: {
      // Any radius in [(1 - jitter) R, R] is a valid surface.
      const double r = (p.head<2>() - o.a).norm();
      const double inner = o.radius_m * (1.0 - o.jitter);
      const double radial = r < inner ? inner - r : std::max(r - o.radius_m, 0.0);
      const double vertical = std::max({p.z() - o.height_m, -p.z(), 0.0});
      if (p.z() >= o.height_m - 1e-9 && r <= o.radius_m) {
        return std::abs(p.z() - o.height_m);
      }
      return std::hypot(radial, vertical);
    }
  }
  return std::numeric_limits<double>::infinity();
}

DepthImage SceneSimulator::metric_depth(
  const CameraCalibration & camera, const VehicleState & ego, std::mt19937_64 & rng) const
{
  DepthImage img;
  img.camera_id = camera.id;
  img.width = camera.width;
  img.height = camera.height;
  img.values.assign(static_cast<std::size_t>(camera.width) * camera.height, 0.0);
  const Eigen::Matrix3d k_inv = camera.intrinsics.inverse();
  const Eigen::Matrix3d r_cv = camera.extrinsics.topLeftCorner<3, 3>();
  const Vector3d origin = vehicle_to_world(camera.center_in_vehicle(), ego);
  const Eigen::Matrix3d to_world = yaw_rotation(ego.yaw_rad) * r_cv.transpose();
  const double max_range = std::max(spec_.lidar.max_range_m, spec_.radar.max_range_m);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Vector3d ray_cam = k_inv * Vector3d(u, v, 1.0);
      const auto hit = raycast(origin, to_world * ray_cam, max_range, rng);
      if (hit) {
        img.values[static_cast<std::size_t>(v) * camera.width + u] =
          hit->range_m * ray_cam.z() / ray_cam.norm();
      }
    }
  }
  return img;
}

OdometrySample SceneSimulator::odometry_at(const SequenceSpec & seq, Timestamp ts) const
{
  OdometrySample out;
  out.timestamp_ns = ts;
  const double t = static_cast<double>(ts - spec_.start_ns) * 1e-9;
  const TrajectorySegment * active = seq.trajectory.empty() ? nullptr : &seq.trajectory.front();
  for (const auto & seg : seq.trajectory) {
    if (seg.t_s <= t) {
      active = &seg;
    }
  }
  if (active != nullptr) {
    out.speed_mps = active->speed_mps;
    out.yaw_rate_radps = active->yaw_rate_radps;
  }
  return out;
}

namespace
{

Timestamp frame_timestamp(const SceneSpec & spec, std::size_t k)
{
  return spec.start_ns + static_cast<Timestamp>(std::llround(static_cast<double>(k) * spec.frame_period_s * 1e9));
}

}  // namespace

std::vector<VehicleState> SceneSimulator::ego_poses(std::size_t sequence_index) const
{
  const SequenceSpec & seq = spec_.sequences.at(sequence_index);
  std::vector<VehicleState> poses{seq.start};
  for (int k = 1; k < seq.frame_count; ++k) {
    const Timestamp prev = frame_timestamp(spec_, static_cast<std::size_t>(k - 1));
    const Timestamp cur = frame_timestamp(spec_, static_cast<std::size_t>(k));
    poses.push_back(integrate_pose(poses.back(), odometry_at(seq, prev), static_cast<double>(cur - prev) * 1e-9));
  }
  return poses;
}

SimulatedFrame SceneSimulator::simulate_frame(
  std::size_t sequence_index, std::size_t frame_index, const VehicleState & ego, bool with_depth) const
{
  const SequenceSpec & seq = spec_.sequences[sequence_index];
  const SensorRig & rig = spec_.rig;
  const SensorUncertainty & u = rig.uncertainty;
  SimulatedFrame frame;
  frame.timestamp_ns = frame_timestamp(spec_, frame_index);
  frame.ego_world = ego;
  frame.odometry = odometry_at(seq, frame.timestamp_ns);
  frame.radar.timestamp_ns = frame.timestamp_ns;
  frame.lidar.timestamp_ns = frame.timestamp_ns;

  // LiDAR: full revolution of first-hit returns.
  {
    auto rng = stream(spec_.seed, kLidarStream, sequence_index, frame_index);
    const MountingPose & m = rig.lidar_mount;
    const Vector3d origin = vehicle_to_world({m.x_m, m.y_m, m.z_m}, ego);
    const int columns = static_cast<int>(std::lround(2.0 * kPi / spec_.lidar.azimuth_step_rad));
    for (int c = 0; c < spec_.lidar.channels; ++c) {
      const double el = spec_.lidar.channels == 1
                          ? spec_.lidar.min_elevation_rad
                          : spec_.lidar.min_elevation_rad +
                              c * (spec_.lidar.max_elevation_rad - spec_.lidar.min_elevation_rad) /
                                (spec_.lidar.channels - 1);
      for (int i = 0; i < columns; ++i) {
        const double az = normalize_azimuth(-kPi + (i + 0.5) * spec_.lidar.azimuth_step_rad);
        const Vector3d dir = yaw_rotation(ego.yaw_rad + m.yaw_rad) * local_direction(az, el);
        const auto hit = raycast(origin, dir, spec_.lidar.max_range_m, rng);
        if (hit) {
          frame.lidar.points.push_back({hit->range_m, az, el});
          frame.lidar_object.push_back(hit->object);
        }
      }
    }
  }

  // Radar.
  {
    auto rng = stream(spec_.seed, kRadarStream, sequence_index, frame_index);
    struct Pending
    {
      RadarDetection det;
      TruthRecord truth;
    };
    std::vector<Pending> pending;

    const double v = frame.odometry.speed_mps;
    const double w = frame.odometry.yaw_rate_radps;
    auto make_detection = [&](const RadarSensor & sensor, SphericalPoint sp, double power_mean) {
      RadarDetection det;
      det.sensor_id = sensor.id;
      det.position = sp;
      const Vector3d p = spherical_to_cartesian(sp, sensor.mount).vec();
      const Vector3d s(sensor.mount.x_m, sensor.mount.y_m, sensor.mount.z_m);
      const Vector3d sensor_velocity(v - w * s.y(), w * s.x(), 0.0);
      const Vector3d ray = p - s;
      det.doppler_mps = ray.norm() > 0.0 ? -sensor_velocity.dot(ray.normalized()) : 0.0;
      det.power_db = power_mean - 20.0 * std::log10(std::max(sp.range_m, 1.0)) + gaussian(rng, 2.0);
      return det;
    };
    auto noisy = [&](const SphericalPoint & p) {
      return SphericalPoint{
        std::max(p.range_m + gaussian(rng, u.sigma_r_radar_m), 0.1),
        normalize_azimuth(p.azimuth_rad + gaussian(rng, u.sigma_az_radar_rad)),
        p.elevation_rad + gaussian(rng, u.sigma_el_radar_rad)};
    };
    auto local_of = [&](const Vector3d & world, const RadarSensor & sensor) {
      return cartesian_to_spherical(CartesianPoint::from(world_to_vehicle(world, ego)), sensor.mount);
    };

    std::vector<std::size_t> walls;
    for (std::size_t i = 0; i < spec_.objects.size(); ++i) {
      if (spec_.objects[i].kind == ObjectKind::kWall) {
        walls.push_back(i);
      }
    }

    for (const auto & sensor : rig.radars) {
      const MountingPose & m = sensor.mount;
      const Vector3d origin = vehicle_to_world({m.x_m, m.y_m, m.z_m}, ego);
      for (int r = 0; r < spec_.radar.rays_per_sensor; ++r) {
        const double az = uniform(rng, -0.5 * sensor.fov_rad, 0.5 * sensor.fov_rad);
        const double el = uniform(rng, spec_.radar.min_elevation_rad, spec_.radar.max_elevation_rad);
        const double detect = uniform(rng, 0.0, 1.0);
        const double intra = uniform(rng, 0.0, 1.0);
        const double ghost = uniform(rng, 0.0, 1.0);
        const Vector3d dir = yaw_rotation(ego.yaw_rad + m.yaw_rad) * local_direction(az, el);
        const auto hit = raycast(origin, dir, spec_.radar.max_range_m, rng);
        if (!hit || hit->object < 0 || detect >= spec_.radar.detection_probability) {
          continue;
        }
        const SceneObject & obj = spec_.objects[static_cast<std::size_t>(hit->object)];
        const bool solid = obj.kind == ObjectKind::kWall || obj.kind == ObjectKind::kBox;
        if (solid && intra < spec_.intra_object_rate) {
          const SphericalPoint behind{hit->range_m + uniform(rng, 0.5, 2.0), az, el};
          pending.push_back({make_detection(sensor, noisy(behind), 0.0),
                             {0, DetectionOrigin::kIntraObject, ClusterLabel::kArtifacts}});
          continue;
        }
        pending.push_back({make_detection(sensor, noisy({hit->range_m, az, el}), 10.0),
                           {1, DetectionOrigin::kSurface, obj.cluster}});

        if (ghost < spec_.mirror_artifact_rate) {
          const Vector3d p = origin + hit->range_m * dir;
          std::optional<std::size_t> nearest;
          double best = std::numeric_limits<double>::infinity();
          for (const std::size_t wi : walls) {
            if (static_cast<int>(wi) == hit->object) {
              continue;
            }
            const double dist = segment_rect_distance(spec_.objects[wi], p);
            if (dist < best) {
              best = dist;
              nearest = wi;
            }
          }
          if (nearest) {
            const SceneObject & wall = spec_.objects[*nearest];
            const Vector2d e = (wall.b - wall.a).normalized();
            const Vector3d n(-e.y(), e.x(), 0.0);
            const Vector3d mirrored = p - 2.0 * (p - Vector3d(wall.a.x(), wall.a.y(), 0.0)).dot(n) * n;
            const SphericalPoint gp = local_of(mirrored, sensor);
            if (std::abs(gp.azimuth_rad) <= 0.5 * sensor.fov_rad && gp.range_m > 0.5 &&
                gp.range_m <= spec_.radar.max_range_m) {
              pending.push_back({make_detection(sensor, noisy(gp), 0.0),
                                 {0, DetectionOrigin::kMirrorGhost, ClusterLabel::kArtifacts}});
            }
          }
        }
      }
    }

    if (!rig.radars.empty()) {
      const auto pick = [&]() -> const RadarSensor & {
        return rig.radars[std::uniform_int_distribution<std::size_t>(0, rig.radars.size() - 1)(rng)];
      };
      const int clutter = std::poisson_distribution<int>(spec_.clutter_rate)(rng);
      for (int c = 0; c < clutter; ++c) {
        const RadarSensor & sensor = pick();
        const SphericalPoint sp{
          uniform(rng, 0.5, spec_.radar.max_range_m),
          uniform(rng, -0.5 * sensor.fov_rad, 0.5 * sensor.fov_rad),
          uniform(rng, spec_.radar.min_elevation_rad, spec_.radar.clutter_elevation_rad)};
        RadarDetection det = make_detection(sensor, sp, -5.0);
        det.doppler_mps += gaussian(rng, 1.0);
        pending.push_back({det, {0, DetectionOrigin::kClutter, ClusterLabel::kArtifacts}});
      }
      const int ground = std::poisson_distribution<int>(spec_.ground_return_rate)(rng);
      for (int g = 0; g < ground; ++g) {
        const RadarSensor & sensor = pick();
        const double range = uniform(rng, 2.0, 15.0);
        const SphericalPoint sp{
          range, uniform(rng, -0.5 * sensor.fov_rad, 0.5 * sensor.fov_rad),
          std::asin(std::clamp(-sensor.mount.z_m / range, -1.0, 1.0))};
        pending.push_back({make_detection(sensor, noisy(sp), 0.0),
                           {0, DetectionOrigin::kGround, ClusterLabel::kArtifacts}});
      }
    }

    std::shuffle(pending.begin(), pending.end(), rng);
    for (auto & p : pending) {
      frame.radar.detections.push_back(std::move(p.det));
      frame.truth.push_back(p.truth);
    }
  }

  if (with_depth) {
    for (std::size_t c = 0; c < rig.cameras.size(); ++c) {
      const auto & cam = rig.cameras[c];
      auto rng = stream(spec_.seed, kDepthStream, sequence_index, frame_index * 64 + c);
      DepthImage img = metric_depth(cam, ego, rng);
      const double s = depth_scale(cam.id);
      for (double & value : img.values) {
        value /= s;
      }
      frame.depth.push_back(std::move(img));
    }
  }
  return frame;
}

std::vector<SimulatedFrame> SceneSimulator::simulate_sequence(std::size_t sequence_index, bool with_depth) const
{
  const auto poses = ego_poses(sequence_index);
  std::vector<SimulatedFrame> frames;
  frames.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    frames.push_back(simulate_frame(sequence_index, k, poses[k], with_depth));
  }
  return frames;
}

std::string truth_csv(std::span<const TruthRecord> truth)
{
  std::ostringstream out;
  out << "detection_index,y,origin,cluster\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out << i << ',' << truth[i].y << ',' << to_string(truth[i].origin) << ',' << to_string(truth[i].cluster)
        << '\n';
  }
  return out.str();
}

std::vector<TruthRecord> read_truth_csv(const fs::path & path)
{
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "detection_index,y,origin,cluster") {
    throw DataError(path.string() + ": unexpected truth header");
  }
  std::vector<TruthRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      cells.push_back(cell);
    }
    const auto fail = [&](const std::string & msg) {
      return DataError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (cells.size() != 4 || cells[0] != std::to_string(out.size())) {
      throw fail("malformed truth row");
    }
    TruthRecord t;
    if (cells[1] != "0" && cells[1] != "1") {
      throw fail("label must be 0 or 1");
    }
    t.y = cells[1] == "1" ? 1 : 0;
    bool known = false;
    for (const auto o : {DetectionOrigin::kSurface, DetectionOrigin::kIntraObject, DetectionOrigin::kMirrorGhost,
                         DetectionOrigin::kClutter, DetectionOrigin::kGround}) {
      if (to_string(o) == cells[2]) {
        t.origin = o;
        known = true;
      }
    }
    const auto cluster = cluster_from_string(cells[3]);
    if (!known || !cluster) {
      throw fail("unknown origin or cluster");
    }
    t.cluster = *cluster;
    out.push_back(t);
  }
  return out;
}

std::map<Timestamp, std::vector<int>> ground_truth(const fs::path & dataset_root, const std::string & seq_id)
{
  const fs::path dir = layout::truth_dir(dataset_root, seq_id);
  if (!fs::is_directory(dir)) {
    throw DataError("no ground truth for sequence '" + seq_id + "'");
  }
  std::map<Timestamp, std::vector<int>> out;
  for (const Timestamp ts : list_timestamps(dir, ".csv")) {
    std::vector<int> labels;
    for (const auto & t : read_truth_csv(layout::frame_file(dir, ts, ".csv"))) {
      labels.push_back(t.y);
    }
    out.emplace(ts, std::move(labels));
  }
  return out;
}

DatasetManifest generate_dataset(const SceneSpec & spec, const fs::path & out_path)
{
  const SceneSimulator sim(spec);
  fs::create_directories(out_path);
  save_rig(sim.rig(), layout::calibration(out_path));

  std::vector<std::exception_ptr> errors(spec.sequences.size());
  auto write_sequence = [&](std::size_t si) {
    try {
      const SequenceSpec & seq = spec.sequences[si];
      const auto radar_dir = layout::radar_dir(out_path, seq.id);
      const auto lidar_dir = layout::lidar_dir(out_path, seq.id);
      const auto truth_dir = layout::truth_dir(out_path, seq.id);
      for (const auto & d : {radar_dir, lidar_dir, truth_dir}) {
        fs::create_directories(d);
      }
      if (spec.write_depth) {
        for (const auto & cam : sim.rig().cameras) {
          fs::create_directories(layout::depth_dir(out_path, seq.id) / cam.id);
        }
      }
      const auto poses = sim.ego_poses(si);
      std::vector<OdometrySample> odometry;
      for (std::size_t k = 0; k < poses.size(); ++k) {
        const SimulatedFrame f = sim.simulate_frame(si, k, poses[k], spec.write_depth);
        write_radar_csv(layout::frame_file(radar_dir, f.timestamp_ns, ".csv"), f.radar);
        write_lidar_csv(layout::frame_file(lidar_dir, f.timestamp_ns, ".csv"), f.lidar);
        write_text(layout::frame_file(truth_dir, f.timestamp_ns, ".csv"), truth_csv(f.truth));
        for (const auto & img : f.depth) {
          write_depth_pgm(
            layout::frame_file(layout::depth_dir(out_path, seq.id) / img.camera_id, f.timestamp_ns, ".pgm"), img);
        }
        odometry.push_back(f.odometry);
      }
      write_odometry_csv(layout::odometry(out_path, seq.id), odometry);
    } catch (...) {
      errors[si] = std::current_exception();
    }
  };

  std::vector<std::thread> workers;
  for (std::size_t si = 0; si < spec.sequences.size(); ++si) {
    workers.emplace_back(write_sequence, si);
  }
  for (auto & t : workers) {
    t.join();
  }
  for (const auto & e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  nlohmann::json manifest;
  manifest["seed"] = spec.seed;
  manifest["depth_scales"] = spec.depth_scales;
  manifest["sequences"] = nlohmann::json::array();
  for (const auto & seq : spec.sequences) {
    manifest["sequences"].push_back({{"id", seq.id}, {"frame_count", seq.frame_count}});
  }
  write_text(out_path / "synth_manifest.json", manifest.dump(2) + "\n");
  return open_dataset(out_path);
}

SyntheticDepthProvider::SyntheticDepthProvider(const SceneSimulator & sim, std::size_t sequence_index)
: sim_(sim), sequence_index_(sequence_index)
{
  const auto poses = sim_.ego_poses(sequence_index);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    poses_.emplace(frame_timestamp(sim_.spec(), k), std::make_pair(k, poses[k]));
  }
}

std::optional<DepthImage> SyntheticDepthProvider::depth(const std::string & camera_id, Timestamp ts) const
{
  const auto it = poses_.find(ts);
  if (it == poses_.end()) {
    return std::nullopt;
  }
  const auto & cams = sim_.rig().cameras;
  for (std::size_t c = 0; c < cams.size(); ++c) {
    if (cams[c].id == camera_id) {
      auto rng = stream(sim_.spec().seed, kDepthStream, sequence_index_, it->second.first * 64 + c);
      DepthImage img = sim_.metric_depth(cams[c], it->second.second, rng);
      const double s = sim_.depth_scale(camera_id);
      for (double & v : img.values) {
        v /= s;
      }
      return img;
    }
  }
  return std::nullopt;
}

FileDepthProvider::FileDepthProvider(fs::path dataset_root, std::string seq_id)
: root_(std::move(dataset_root)), seq_(std::move(seq_id))
{
}

std::optional<DepthImage> FileDepthProvider::depth(const std::string & camera_id, Timestamp ts) const
{
  const fs::path path = layout::frame_file(layout::depth_dir(root_, seq_) / camera_id, ts, ".pgm");
  if (!fs::exists(path)) {
    return std::nullopt;
  }
  return read_depth_pgm(path, camera_id);
}

}  // namespace ralf::synth

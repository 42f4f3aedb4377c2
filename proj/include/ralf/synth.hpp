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

#ifndef RALF__SYNTH_HPP_
#define RALF__SYNTH_HPP_

#include "ralf/camera_match.hpp"
#include "ralf/core.hpp"
#include "ralf/ingest.hpp"
#include "ralf/metrics.hpp"
#include "ralf/rig.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ralf::synth
{

enum class ObjectKind { kWall, kPole, kBox, kVegetation };

/// Static scene primitive standing on the ground plane z = 0 (world frame).
struct SceneObject
{
  ObjectKind kind{ObjectKind::kWall};
  ClusterLabel cluster{ClusterLabel::kConstruction};
  // wall: segment endpoints; others: center in `a`.
  Eigen::Vector2d a{Eigen::Vector2d::Zero()};
  Eigen::Vector2d b{Eigen::Vector2d::Zero()};
  double radius_m{0.5};   // pole, vegetation
  Eigen::Vector2d size_m{4.5, 1.8};  // box length x width
  double yaw_rad{0.0};    // box
  double height_m{2.0};
  double jitter{0.3};     // vegetation: fraction of the radius resampled per ray
};

struct TrajectorySegment
{
  double t_s{0.0};
  double speed_mps{0.0};
  double yaw_rate_radps{0.0};
};

struct SequenceSpec
{
  std::string id;
  int frame_count{0};
  VehicleState start;
  std::vector<TrajectorySegment> trajectory;
};

struct LidarModel
{
  int channels{40};
  double min_elevation_rad{-25.0 * kPi / 180.0};
  double max_elevation_rad{15.0 * kPi / 180.0};
  double azimuth_step_rad{1.0 * kPi / 180.0};
  double max_range_m{60.0};
};

struct RadarModel
{
  int rays_per_sensor{40};
  double max_range_m{40.0};
  double min_elevation_rad{0.0};
  double max_elevation_rad{12.0 * kPi / 180.0};
  double clutter_elevation_rad{10.0 * kPi / 180.0};
  double detection_probability{0.9};
};

struct SceneSpec
{
  std::uint64_t seed{0};
  double frame_period_s{0.1};
  Timestamp start_ns{1'000'000'000};
  /// Poisson mean of uniformly distributed clutter detections per frame.
  double clutter_rate{0.0};
  /// Fraction of surface detections that spawn a mirror ghost behind a wall.
  double mirror_artifact_rate{0.0};
  /// Fraction of wall / vehicle hits replaced by a reflection from behind the first surface.
  double intra_object_rate{0.0};
  /// Poisson mean of floor detections per frame.
  double ground_return_rate{0.0};
  bool write_depth{true};
  LidarModel lidar;
  RadarModel radar;
  std::vector<SceneObject> objects;
  std::vector<SequenceSpec> sequences;
  SensorRig rig;
  /// Hidden per-camera factor: stored relative depth = metric depth / factor.
  std::map<std::string, double> depth_scales;
};

/// The default synthetic rig: four corner radars, a roof LiDAR and four surround cameras.
SensorRig default_rig(const LidarModel & lidar);

/// Parses a scene file. Unknown keys are rejected; missing depth scales are drawn from
/// [0.2, 5] with the scene seed.
SceneSpec scene_from_json(const nlohmann::json & j);
SceneSpec load_scene_spec(const std::filesystem::path & path);

enum class DetectionOrigin { kSurface, kIntraObject, kMirrorGhost, kClutter, kGround };

std::string_view to_string(DetectionOrigin o);

struct TruthRecord
{
  int y{0};
  DetectionOrigin origin{DetectionOrigin::kClutter};
  ClusterLabel cluster{ClusterLabel::kArtifacts};
};

struct Hit
{
  double range_m{0.0};
  int object{-1};  // -1 is the ground plane
};

struct SimulatedFrame
{
  Timestamp timestamp_ns{0};
  VehicleState ego_world;
  OdometrySample odometry;
  RadarFrame radar;
  std::vector<TruthRecord> truth;
  LidarFrame lidar;
  std::vector<int> lidar_object;  // per LiDAR point, -1 for ground
  std::vector<DepthImage> depth;  // relative depth per camera, rig order
};

class SceneSimulator
{
public:
  explicit SceneSimulator(SceneSpec spec);

  const SceneSpec & spec() const { return spec_; }
  const SensorRig & rig() const { return spec_.rig; }

  /// Deterministic in (seed, sequence index, frame index).
  std::vector<SimulatedFrame> simulate_sequence(std::size_t sequence_index, bool with_depth) const;

  std::vector<VehicleState> ego_poses(std::size_t sequence_index) const;

  /// First hit along a world-frame ray. Vegetation surfaces draw their jitter from `rng`.
  std::optional<Hit> raycast(
    const Eigen::Vector3d & origin, const Eigen::Vector3d & direction, double max_range,
    std::mt19937_64 & rng) const;

  /// Metric optical depth image of one camera at an ego pose (0 where nothing is hit).
  DepthImage metric_depth(const CameraCalibration & camera, const VehicleState & ego, std::mt19937_64 & rng) const;

  double depth_scale(const std::string & camera_id) const;

  /// Distance from a world point to the surface of object `id` (ground for -1).
  double surface_distance(const Eigen::Vector3d & p, int id) const;

  SimulatedFrame simulate_frame(
    std::size_t sequence_index, std::size_t frame_index, const VehicleState & ego, bool with_depth) const;

private:
  OdometrySample odometry_at(const SequenceSpec & seq, Timestamp ts) const;

  SceneSpec spec_;
};

/// Writes a dataset in the ingest layout plus `truth/<ts>.csv` ground-truth files and a
/// `synth_manifest.json` with the hidden depth scales. Throws DataError for a scene without
/// objects or frames.
DatasetManifest generate_dataset(const SceneSpec & spec, const std::filesystem::path & out_path);

/// Per-detection ground truth of one generated frame.
std::vector<TruthRecord> read_truth_csv(const std::filesystem::path & path);
std::string truth_csv(std::span<const TruthRecord> truth);

/// Ground-truth labels for every frame of a generated sequence, keyed by radar timestamp.
std::map<Timestamp, std::vector<int>> ground_truth(
  const std::filesystem::path & dataset_root, const std::string & seq_id);

/// Depth provider that ray-casts the synthetic scene and applies the hidden scale.
class SyntheticDepthProvider : public DepthProvider
{
public:
  SyntheticDepthProvider(const SceneSimulator & sim, std::size_t sequence_index);
  std::optional<DepthImage> depth(const std::string & camera_id, Timestamp ts) const override;

private:
  const SceneSimulator & sim_;
  std::size_t sequence_index_;
  std::map<Timestamp, std::pair<std::size_t, VehicleState>> poses_;
};

/// Reads precomputed PGM depth maps from a dataset directory.
class FileDepthProvider : public DepthProvider
{
public:
  FileDepthProvider(std::filesystem::path dataset_root, std::string seq_id);
  std::optional<DepthImage> depth(const std::string & camera_id, Timestamp ts) const override;

private:
  std::filesystem::path root_;
  std::string seq_;
};

}  // namespace ralf::synth

#endif  // RALF__SYNTH_HPP_

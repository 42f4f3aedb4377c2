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
#include "ralf/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace ralf::synth
{
namespace
{

/// Mixed scene minus vegetation, whose per-ray jitter depends on the simulator's own streams.
nlohmann::json rigid_scene_json()
{
  nlohmann::json j = test::mixed_scene_json(1);
  auto & objects = j["objects"];
  objects.erase(std::remove_if(objects.begin(), objects.end(),
                               [](const nlohmann::json & o) { return o["type"] == "vegetation"; }),
                objects.end());
  return j;
}

Eigen::Vector3d to_world(const CartesianPoint & p, const VehicleState & ego)
{
  return yaw_rotation(ego.yaw_rad) * p.vec() + Eigen::Vector3d(ego.x_m, ego.y_m, ego.z_m);
}

/// Clutter-only scene: the single object sits beyond every sensor's range.
SceneSpec clutter_scene(double rate, int frames)
{
  nlohmann::json j = {
    {"seed", 77},
    {"clutter_rate", rate},
    {"write_depth", false},
    {"lidar", {{"channels", 8}, {"azimuth_step_deg", 4.0}}},
    {"objects", {{{"type", "wall"}, {"from", {500.0, -5.0}}, {"to", {500.0, 5.0}}}}},
    {"sequences", {{{"id", "c"}, {"frame_count", frames}, {"trajectory", {{{"t_s", 0.0}, {"speed_mps", 1.0}}}}}}},
  };
  return scene_from_json(j);
}

TEST(SceneSpec, RejectsUnknownKeysAndEmptyScenes)
{
  nlohmann::json j = test::mixed_scene_json();
  j["colour"] = "red";
  EXPECT_THROW(scene_from_json(j), DataError);
  j = test::mixed_scene_json();
  j["objects"] = nlohmann::json::array();
  EXPECT_THROW(SceneSimulator(scene_from_json(j)), DataError);
  j = test::mixed_scene_json();
  j["sequences"][0]["frame_count"] = 0;
  EXPECT_THROW(SceneSimulator(scene_from_json(j)), DataError);
  j = test::mixed_scene_json();
  j["clutter_rate"] = -1.0;
  EXPECT_THROW(scene_from_json(j), DataError);
}

TEST(SceneSpec, HiddenDepthScalesAreDrawnInRangeAndOverridable)
{
  nlohmann::json j = test::mixed_scene_json();
  const SceneSpec drawn = scene_from_json(j);
  ASSERT_EQ(drawn.depth_scales.size(), drawn.rig.cameras.size());
  for (const auto & [id, s] : drawn.depth_scales) {
    EXPECT_GE(s, 0.2) << id;
    EXPECT_LE(s, 5.0) << id;
  }
  j["depth_scales"] = {{"front", 2.5}};
  EXPECT_EQ(scene_from_json(j).depth_scales.at("front"), 2.5);
}

TEST(Simulator, DeterministicForAFixedSeed)
{
  const SceneSimulator a(scene_from_json(test::mixed_scene_json(4)));
  const SceneSimulator b(scene_from_json(test::mixed_scene_json(4)));
  const auto fa = a.simulate_sequence(1, true);
  const auto fb = b.simulate_sequence(1, true);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t k = 0; k < fa.size(); ++k) {
    EXPECT_EQ(fa[k].timestamp_ns, fb[k].timestamp_ns);
    EXPECT_EQ(truth_csv(fa[k].truth), truth_csv(fb[k].truth));
    ASSERT_EQ(fa[k].radar.detections.size(), fb[k].radar.detections.size());
    for (std::size_t i = 0; i < fa[k].radar.detections.size(); ++i) {
      EXPECT_EQ(fa[k].radar.detections[i].position.range_m, fb[k].radar.detections[i].position.range_m);
      EXPECT_EQ(fa[k].radar.detections[i].sensor_id, fb[k].radar.detections[i].sensor_id);
    }
    ASSERT_EQ(fa[k].depth.size(), fb[k].depth.size());
    EXPECT_EQ(fa[k].depth[0].values, fb[k].depth[0].values);
  }
  nlohmann::json other = test::mixed_scene_json(4);
  other["seed"] = 6;
  const auto fc = SceneSimulator(scene_from_json(other)).simulate_sequence(1, false);
  EXPECT_NE(truth_csv(fa[0].truth) + std::to_string(fa[0].radar.detections.size()),
            truth_csv(fc[0].truth) + std::to_string(fc[0].radar.detections.size()));
}

TEST(Simulator, OneWallWithoutArtifactsIsAllPlausible)
{
  const SceneSimulator sim(test::one_wall_scene(8));
  std::size_t count = 0;
  for (const auto & f : sim.simulate_sequence(0, false)) {
    ASSERT_EQ(f.truth.size(), f.radar.detections.size());
    for (const auto & t : f.truth) {
      EXPECT_EQ(t.y, 1);
      EXPECT_EQ(t.origin, DetectionOrigin::kSurface);
      EXPECT_EQ(t.cluster, ClusterLabel::kConstruction);
      ++count;
    }
  }
  EXPECT_GT(count, 20U);
}

TEST(Simulator, ClutterCountFollowsPoissonRate)
{
  const double rate = 25.0;
  const int frames = 60;
  const SceneSimulator sim(clutter_scene(rate, frames));
  std::size_t total = 0;
  for (const auto & f : sim.simulate_sequence(0, false)) {
    for (const auto & t : f.truth) {
      EXPECT_EQ(t.origin, DetectionOrigin::kClutter);
      EXPECT_EQ(t.y, 0);
    }
    total += f.truth.size();
  }
  const double expected = rate * frames;
  EXPECT_LT(std::abs(static_cast<double>(total) - expected), 4.0 * std::sqrt(expected));
}

TEST(Simulator, LidarPointsLieOnTheSurfaceTheyHit)
{
  nlohmann::json j = test::mixed_scene_json(3);
  const SceneSimulator sim(scene_from_json(j));
  const auto poses = sim.ego_poses(0);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const SimulatedFrame f = sim.simulate_frame(0, k, poses[k], false);
    ASSERT_EQ(f.lidar.points.size(), f.lidar_object.size());
    for (std::size_t i = 0; i < f.lidar.points.size(); ++i) {
      const int id = f.lidar_object[i];
      if (id >= 0 && sim.spec().objects[static_cast<std::size_t>(id)].kind == ObjectKind::kVegetation) {
        continue;
      }
      const Eigen::Vector3d w = to_world(spherical_to_cartesian(f.lidar.points[i], sim.rig().lidar_mount), poses[k]);
      ASSERT_LT(sim.surface_distance(w, id), 1e-6) << "object " << id;
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000U);
}

TEST(Simulator, EveryObjectKindAndArtifactAppears)
{
  const SceneSimulator sim(scene_from_json(test::mixed_scene_json(10)));
  std::map<DetectionOrigin, std::size_t> origins;
  for (std::size_t s = 0; s < 2; ++s) {
    for (const auto & f : sim.simulate_sequence(s, false)) {
      for (const auto & t : f.truth) {
        ++origins[t.origin];
        EXPECT_EQ(t.y, t.origin == DetectionOrigin::kSurface ? 1 : 0);
      }
    }
  }
  for (const auto o : {DetectionOrigin::kSurface, DetectionOrigin::kIntraObject, DetectionOrigin::kMirrorGhost,
                       DetectionOrigin::kClutter, DetectionOrigin::kGround}) {
    EXPECT_GT(origins[o], 0U) << to_string(o);
  }
}

TEST(Simulator, RelativeDepthHidesTheScale)
{
  nlohmann::json j = rigid_scene_json();
  j["depth_scales"] = {{"front", 0.25}, {"left", 4.0}};
  const SceneSimulator sim(scene_from_json(j));
  const auto pose = sim.ego_poses(0).front();
  const SimulatedFrame f = sim.simulate_frame(0, 0, pose, true);
  for (std::size_t c = 0; c < sim.rig().cameras.size(); ++c) {
    const auto & cam = sim.rig().cameras[c];
    std::mt19937_64 unused(0);
    const DepthImage metric = sim.metric_depth(cam, pose, unused);
    const double s = sim.depth_scale(cam.id);
    for (std::size_t i = 0; i < metric.values.size(); i += 97) {
      EXPECT_NEAR(f.depth[c].values[i] * s, metric.values[i], 1e-9 * std::max(1.0, metric.values[i]));
    }
  }
}

TEST(Dataset, GeneratedFilesReplayTheSimulation)
{
  test::TempDir dir;
  const SceneSpec spec = scene_from_json(test::mixed_scene_json(3));
  const DatasetManifest m = generate_dataset(spec, dir.path());
  EXPECT_EQ(m.sequences, (std::vector<std::string>{"a", "b"}));
  const SceneSimulator sim(spec);
  const auto frames = sim.simulate_sequence(0, false);
  const auto truth = ground_truth(dir.path(), "a");
  ASSERT_EQ(truth.size(), frames.size());
  const auto loaded = load_sequence(open_dataset(dir.path()), "a");
  ASSERT_EQ(loaded.size(), frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    std::vector<int> y;
    for (const auto & t : frames[k].truth) {
      y.push_back(t.y);
    }
    EXPECT_EQ(truth.at(frames[k].timestamp_ns), y);
    EXPECT_EQ(loaded[k].radar.timestamp_ns, frames[k].timestamp_ns);
    ASSERT_EQ(loaded[k].radar.detections.size(), frames[k].radar.detections.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_EQ(loaded[k].radar.detections[i].position.azimuth_rad, frames[k].radar.detections[i].position.azimuth_rad);
    }
    ASSERT_TRUE(loaded[k].lidar.has_value());
    EXPECT_EQ(loaded[k].lidar->points.size(), frames[k].lidar.points.size());
    EXPECT_EQ(loaded[k].depth_images.size(), spec.rig.cameras.size());
    EXPECT_DOUBLE_EQ(loaded[k].odometry.speed_mps, frames[k].odometry.speed_mps);
  }
  const auto stored = nlohmann::json::parse(read_file(dir.path() / "synth_manifest.json"));
  EXPECT_EQ(stored["seed"].get<std::uint64_t>(), spec.seed);
}

TEST(Dataset, TruthCsvRoundTrip)
{
  test::TempDir dir;
  const std::vector<TruthRecord> t{{1, DetectionOrigin::kSurface, ClusterLabel::kPoles},
                                   {0, DetectionOrigin::kMirrorGhost, ClusterLabel::kArtifacts}};
  write_file_atomic(dir.path() / "t.csv", truth_csv(t));
  const auto back = read_truth_csv(dir.path() / "t.csv");
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[0].cluster, ClusterLabel::kPoles);
  EXPECT_EQ(back[1].origin, DetectionOrigin::kMirrorGhost);
}

TEST(DepthScale, RecoveredFromPixelCenterAnchors)
{
  nlohmann::json j = rigid_scene_json();
  j["depth_scales"] = {{"front", 0.2}, {"rear", 5.0}, {"left", 1.7}, {"right", 0.45}};
  const SceneSimulator sim(scene_from_json(j));
  const auto pose = sim.ego_poses(0).front();
  const SimulatedFrame f = sim.simulate_frame(0, 0, pose, true);
  for (std::size_t c = 0; c < sim.rig().cameras.size(); ++c) {
    const DepthImage & rel = f.depth[c];
    std::mt19937_64 rng(0);
    const DepthImage metric = sim.metric_depth(sim.rig().cameras[c], pose, rng);
    std::vector<DepthAnchor> anchors;
    for (int v = 3; v < rel.height; v += 11) {
      for (int u = 5; u < rel.width; u += 13) {
        if (metric.at(u, v) > 0.0) {
          anchors.push_back({double(u), double(v), metric.at(u, v)});
        }
      }
    }
    ASSERT_GE(anchors.size(), 4U);
    const auto calibrated = calibrate_depth_scale(rel, anchors, 16, 4);
    ASSERT_TRUE(calibrated.has_value());
    const double s = sim.depth_scale(rel.camera_id);
    for (int v = 0; v < rel.height; v += 16) {
      for (int u = 0; u < rel.width; u += 16) {
        EXPECT_NEAR(calibrated->scale_at(u, v) / s, 1.0, 1e-3);
      }
    }
  }
}

}  // namespace
}  // namespace ralf::synth

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

#ifndef RALF__INGEST_HPP_
#define RALF__INGEST_HPP_

#include "ralf/camera_match.hpp"
#include "ralf/core.hpp"
#include "ralf/rig.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ralf
{

namespace fs = std::filesystem;

struct OdometrySample
{
  Timestamp timestamp_ns{0};
  double speed_mps{0.0};
  double yaw_rate_radps{0.0};
};

struct InterpolatedOdometry
{
  OdometrySample sample;
  bool extrapolated{false};
};

/// Linear interpolation between the bracketing samples; outside the covered interval the
/// nearest endpoint is returned and flagged. Throws DataError on an empty sample list.
InterpolatedOdometry interpolate_odometry(std::span<const OdometrySample> samples, Timestamp t);

/// One radar scan with its time-synchronized partners. Absent partners mean the
/// corresponding branch is unavailable for this scan.
struct SyncedFrame
{
  RadarFrame radar;
  std::optional<LidarFrame> lidar;
  std::vector<DepthImage> depth_images;
  OdometrySample odometry;
  bool odometry_extrapolated{false};
};

struct DatasetManifest
{
  fs::path root;
  std::vector<std::string> sequences;
  SensorRig calibration;
};

struct IngestOptions
{
  Timestamp sync_tolerance_ns{50'000'000};
  bool load_depth{true};
};

/// File layout of a dataset directory.
namespace layout
{
fs::path calibration(const fs::path & root);
fs::path radar_dir(const fs::path & root, std::string_view seq);
fs::path lidar_dir(const fs::path & root, std::string_view seq);
fs::path depth_dir(const fs::path & root, std::string_view seq);
fs::path odometry(const fs::path & root, std::string_view seq);
fs::path labels_dir(const fs::path & root, std::string_view seq);
fs::path truth_dir(const fs::path & root, std::string_view seq);
fs::path frame_file(const fs::path & dir, Timestamp ts, std::string_view extension);
}  // namespace layout

/// Reads the calibration and lists every sequence directory, sorted by id.
DatasetManifest open_dataset(const fs::path & root);

/// Synced frames ordered by radar timestamp. Missing sequence data raises DataError; a
/// sequence without radar scans yields an empty list.
std::vector<SyncedFrame> load_sequence(
  const DatasetManifest & manifest, const std::string & seq_id, const IngestOptions & options = {});

/// Timestamps of the `<timestamp_ns><extension>` files in `dir`, ascending.
std::vector<Timestamp> list_timestamps(const fs::path & dir, std::string_view extension);

/// Index of the timestamp nearest to t (earlier one on ties), if within tolerance.
std::optional<std::size_t> nearest_within(
  std::span<const Timestamp> sorted, Timestamp t, Timestamp tolerance);

// Shortest round-trip decimal representation.
std::string format_double(double v);

RadarFrame read_radar_csv(const fs::path & path, Timestamp ts);
void write_radar_csv(const fs::path & path, const RadarFrame & frame);
LidarFrame read_lidar_csv(const fs::path & path, Timestamp ts);
void write_lidar_csv(const fs::path & path, const LidarFrame & frame);
std::vector<OdometrySample> read_odometry_csv(const fs::path & path);
void write_odometry_csv(const fs::path & path, std::span<const OdometrySample> samples);

/// 16-bit big-endian binary PGM plus an optional `.meta` sidecar carrying `scale_hint`.
/// Relative depth is sample * scale_hint, or sample / maxval without a sidecar.
DepthImage read_depth_pgm(const fs::path & path, std::string camera_id);
void write_depth_pgm(const fs::path & path, const DepthImage & image);

std::vector<PlausibilityRecord> read_labels_csv(const fs::path & path, Timestamp ts);
std::string labels_csv(std::span<const PlausibilityRecord> records);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const fs::path & path, std::string_view content);
std::string read_file(const fs::path & path);

}  // namespace ralf

#endif  // RALF__INGEST_HPP_

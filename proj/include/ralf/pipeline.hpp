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

#ifndef RALF__PIPELINE_HPP_
#define RALF__PIPELINE_HPP_

#include "ralf/camera_match.hpp"
#include "ralf/core.hpp"
#include "ralf/fusion.hpp"
#include "ralf/geometry.hpp"
#include "ralf/ingest.hpp"
#include "ralf/lidar_match.hpp"
#include "ralf/metrics.hpp"
#include "ralf/rig.hpp"
#include "ralf/tracking.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ralf
{

struct RunConfig
{
  LidarMatchConfig lidar_match;
  CameraMatchConfig camera_match;
  GroundFilterConfig ground;
  bool ground_filter{true};
  /// Replaces the rig's cone when set.
  std::optional<BlindspotCone> blindspot;
  TrackingConfig tracking;
  FusionConfig fusion;
  AzimuthReliabilityProfile profile{AzimuthReliabilityProfile::symmetric(80.0 * kPi / 180.0, 1.5)};
  Timestamp sync_tolerance_ns{50'000'000};
  /// Worker threads; 0 picks the hardware concurrency.
  int threads{0};

  void validate() const;
};

/// Unknown keys are rejected; absent keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json & j);
nlohmann::json run_config_to_json(const RunConfig & cfg);
RunConfig load_run_config(const std::filesystem::path & path);

/// Outcome of the held-out anchor check of one camera in one frame.
struct ConsistencyFlag
{
  Timestamp frame_ts_ns{0};
  std::string camera_id;
  double inconsistency{0.0};
  bool flagged{false};
};

struct SequenceResult
{
  /// Sorted by (frame, detection index); one entry per detection.
  std::vector<PlausibilityRecord> records;
  /// Reliability divisor applied to each record.
  std::vector<double> gamma;
  std::vector<ConsistencyFlag> consistency;
};

/// Runs every branch on every detection and fuses with cfg.fusion. When `depth` is given it
/// replaces the depth images carried by the frames.
SequenceResult run_sequence(
  std::span<const SyncedFrame> frames, const SensorRig & rig, const RunConfig & cfg,
  const DepthProvider * depth = nullptr);

/// Re-fuses existing branch scores under another fusion setting.
void refuse(SequenceResult & result, const FusionConfig & fusion);

using FrameTruth = std::map<Timestamp, std::vector<int>>;

/// Confusion of effective labels against per-frame truth. Throws DataError when a frame is
/// missing or its detection count differs.
ConfusionMatrix confusion_against(std::span<const PlausibilityRecord> records, const FrameTruth & truth);

struct SweepGrid
{
  std::vector<double> alpha;
  std::vector<double> w0;
};

/// Parses "alpha=0,0.5,1,w0=0.3,0.5". Throws std::invalid_argument on malformed input.
SweepGrid parse_sweep_grid(std::string_view text);

struct SweepPoint
{
  double alpha{0.0};
  double w0{0.0};
  MetricReport report;
};

/// One report per (alpha, w0) pair, alpha-major. Predictions are scored, reviewer corrections
/// are ignored. Throws DataError when truth is missing for a sequence.
std::vector<SweepPoint> sweep(
  const std::map<std::string, SequenceResult> & results, const std::map<std::string, FrameTruth> & truth,
  const SweepGrid & grid);

std::string sweep_csv(std::span<const SweepPoint> points);

struct Correction
{
  Timestamp frame_ts_ns{0};
  std::size_t detection_index{0};
  int y{0};
};

struct CorrectionIssue
{
  std::size_t item{0};
  std::string message;
};

class CorrectionRejected : public DataError
{
public:
  explicit CorrectionRejected(std::vector<CorrectionIssue> issues);
  const std::vector<CorrectionIssue> & issues() const { return issues_; }

private:
  std::vector<CorrectionIssue> issues_;
};

/// Sets y_corrected; later entries for the same detection win. All-or-nothing: any unknown
/// detection or non-binary label throws CorrectionRejected and leaves `records` untouched.
void apply_corrections(std::vector<PlausibilityRecord> & records, std::span<const Correction> corrections);

/// `<root>/<seq>/labels/<ts>.csv` plus `<root>/<seq>/review_flags.csv`.
void write_sequence_outputs(
  const std::filesystem::path & root, const std::string & seq_id, const SequenceResult & result,
  std::span<const Timestamp> frame_timestamps);

/// Reads every labels file of a sequence, keyed by frame timestamp.
std::map<Timestamp, std::vector<PlausibilityRecord>> read_sequence_labels(const std::filesystem::path & labels_dir);

std::vector<ConsistencyFlag> read_review_flags(const std::filesystem::path & path);

/// SHA-256 hex digest.
std::string sha256_hex(std::string_view data);

/// Digest over the sequence's input files (calibration, radar, LiDAR, depth, odometry) in
/// path order.
std::string dataset_hash(const DatasetManifest & manifest, const std::string & seq_id);

nlohmann::json run_manifest(
  const DatasetManifest & manifest, std::span<const std::string> sequences, const RunConfig & cfg);

}  // namespace ralf

#endif  // RALF__PIPELINE_HPP_

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

#include "ralf/pipeline.hpp"

#include "json_util.hpp"
#include "ralf/blindspot.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace ralf
{

void RunConfig::validate() const
{
  lidar_match.validate();
  camera_match.validate();
  tracking.validate();
  fusion.validate();
  if (blindspot) {
    blindspot->validate();
  }
  if (ground.iterations < 1 || !(ground.inlier_threshold_m > 0.0) || !(ground.margin_m >= 0.0)) {
    throw std::invalid_argument("invalid ground filter configuration");
  }
  if (sync_tolerance_ns < 0 || threads < 0) {
    throw std::invalid_argument("sync tolerance and thread count must be nonnegative");
  }
}

namespace
{

using detail::read_optional;
using detail::reject_unknown_keys;

}  // namespace

RunConfig run_config_from_json(const nlohmann::json & j)
{
  RunConfig cfg;
  reject_unknown_keys(
    j, {"lidar_match", "camera_match", "ground", "blindspot", "tracking", "fusion", "sync_tolerance_ns", "threads"},
    "config");
  if (j.contains("lidar_match")) {
    const auto & s = j.at("lidar_match");
    constexpr auto ctx = "config.lidar_match";
    reject_unknown_keys(s, {"k", "beta", "epsilon"}, ctx);
    read_optional(s, "k", cfg.lidar_match.k, ctx);
    read_optional(s, "beta", cfg.lidar_match.beta, ctx);
    read_optional(s, "epsilon", cfg.lidar_match.epsilon, ctx);
  }
  if (j.contains("camera_match")) {
    const auto & s = j.at("camera_match");
    constexpr auto ctx = "config.camera_match";
    reject_unknown_keys(
      s, {"k", "beta", "epsilon", "grid_step_px", "k_anchors", "stride_px", "consistency_threshold", "holdout_every"},
      ctx);
    read_optional(s, "k", cfg.camera_match.k, ctx);
    read_optional(s, "beta", cfg.camera_match.beta, ctx);
    read_optional(s, "epsilon", cfg.camera_match.epsilon, ctx);
    read_optional(s, "grid_step_px", cfg.camera_match.grid_step_px, ctx);
    read_optional(s, "k_anchors", cfg.camera_match.k_anchors, ctx);
    read_optional(s, "stride_px", cfg.camera_match.stride_px, ctx);
    read_optional(s, "consistency_threshold", cfg.camera_match.consistency_threshold, ctx);
    read_optional(s, "holdout_every", cfg.camera_match.holdout_every, ctx);
  }
  if (j.contains("ground")) {
    const auto & s = j.at("ground");
    constexpr auto ctx = "config.ground";
    reject_unknown_keys(s, {"enabled", "iterations", "inlier_threshold_m", "margin_m", "seed"}, ctx);
    read_optional(s, "enabled", cfg.ground_filter, ctx);
    read_optional(s, "iterations", cfg.ground.iterations, ctx);
    read_optional(s, "inlier_threshold_m", cfg.ground.inlier_threshold_m, ctx);
    read_optional(s, "margin_m", cfg.ground.margin_m, ctx);
    read_optional(s, "seed", cfg.ground.seed, ctx);
  }
  if (j.contains("blindspot")) {
    const auto & s = j.at("blindspot");
    constexpr auto ctx = "config.blindspot";
    reject_unknown_keys(s, {"x_l_m", "z_l_m", "alpha_l_rad"}, ctx);
    BlindspotCone cone;
    read_optional(s, "x_l_m", cone.x_l, ctx);
    read_optional(s, "z_l_m", cone.z_l, ctx);
    read_optional(s, "alpha_l_rad", cone.alpha_l, ctx);
    cfg.blindspot = cone;
  }
  if (j.contains("tracking")) {
    const auto & s = j.at("tracking");
    constexpr auto ctx = "config.tracking";
    reject_unknown_keys(s, {"n_b", "beta", "rho", "k", "epsilon"}, ctx);
    read_optional(s, "n_b", cfg.tracking.n_b, ctx);
    read_optional(s, "beta", cfg.tracking.beta, ctx);
    read_optional(s, "rho", cfg.tracking.rho, ctx);
    read_optional(s, "k", cfg.tracking.k, ctx);
    read_optional(s, "epsilon", cfg.tracking.epsilon, ctx);
  }
  if (j.contains("fusion")) {
    const auto & s = j.at("fusion");
    constexpr auto ctx = "config.fusion";
    reject_unknown_keys(s, {"alpha", "w0", "azimuth_profile"}, ctx);
    read_optional(s, "alpha", cfg.fusion.alpha, ctx);
    read_optional(s, "w0", cfg.fusion.w0, ctx);
    if (s.contains("azimuth_profile")) {
      std::vector<AzimuthReliabilityProfile::Breakpoint> points;
      for (const auto & p : s.at("azimuth_profile")) {
        constexpr auto pctx = "config.fusion.azimuth_profile";
        reject_unknown_keys(p, {"azimuth_rad", "gamma"}, pctx);
        points.push_back({detail::read_required<double>(p, "azimuth_rad", pctx),
                          detail::read_required<double>(p, "gamma", pctx)});
      }
      try {
        cfg.profile = AzimuthReliabilityProfile(std::move(points));
      } catch (const std::invalid_argument & e) {
        throw DataError(std::string("config.fusion.azimuth_profile: ") + e.what());
      }
    }
  }
  read_optional(j, "sync_tolerance_ns", cfg.sync_tolerance_ns, "config");
  read_optional(j, "threads", cfg.threads, "config");
  try {
    cfg.validate();
  } catch (const std::invalid_argument & e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig & cfg)
{
  nlohmann::json profile = nlohmann::json::array();
  for (const auto & b : cfg.profile.breakpoints()) {
    profile.push_back({{"azimuth_rad", b.azimuth_rad}, {"gamma", b.gamma}});
  }
  nlohmann::json j = {
    {"lidar_match", {{"k", cfg.lidar_match.k}, {"beta", cfg.lidar_match.beta}, {"epsilon", cfg.lidar_match.epsilon}}},
    {"camera_match",
     {{"k", cfg.camera_match.k},
      {"beta", cfg.camera_match.beta},
      {"epsilon", cfg.camera_match.epsilon},
      {"grid_step_px", cfg.camera_match.grid_step_px},
      {"k_anchors", cfg.camera_match.k_anchors},
      {"stride_px", cfg.camera_match.stride_px},
      {"consistency_threshold", cfg.camera_match.consistency_threshold},
      {"holdout_every", cfg.camera_match.holdout_every}}},
    {"ground",
     {{"enabled", cfg.ground_filter},
      {"iterations", cfg.ground.iterations},
      {"inlier_threshold_m", cfg.ground.inlier_threshold_m},
      {"margin_m", cfg.ground.margin_m},
      {"seed", cfg.ground.seed}}},
    {"tracking",
     {{"n_b", cfg.tracking.n_b},
      {"beta", cfg.tracking.beta},
      {"rho", cfg.tracking.rho},
      {"k", cfg.tracking.k},
      {"epsilon", cfg.tracking.epsilon}}},
    {"fusion", {{"alpha", cfg.fusion.alpha}, {"w0", cfg.fusion.w0}, {"azimuth_profile", profile}}},
    {"sync_tolerance_ns", cfg.sync_tolerance_ns},
    {"threads", cfg.threads},
  };
  if (cfg.blindspot) {
    j["blindspot"] = {
      {"x_l_m", cfg.blindspot->x_l}, {"z_l_m", cfg.blindspot->z_l}, {"alpha_l_rad", cfg.blindspot->alpha_l}};
  }
  return j;
}

RunConfig load_run_config(const std::filesystem::path & path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error & e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

namespace
{

struct FrameOutput
{
  std::vector<PlausibilityRecord> records;
  std::vector<double> gamma;
  std::vector<ConsistencyFlag> consistency;
};

struct OpticalResult
{
  std::vector<Score> w_cm;
  std::vector<ConsistencyFlag> consistency;
};

OpticalResult camera_branch(
  const SyncedFrame & frame, std::span<const DepthImage> depth_images, const std::vector<CartesianPoint> & lidar,
  const SensorRig & rig, const RunConfig & cfg)
{
  OpticalResult out;
  out.w_cm.resize(frame.radar.detections.size());
  std::vector<OpticalPoint> optical;
  for (const auto & img : depth_images) {
    const auto cam = std::find_if(
      rig.cameras.begin(), rig.cameras.end(), [&](const CameraCalibration & c) { return c.id == img.camera_id; });
    if (cam == rig.cameras.end() || img.width != cam->width || img.height != cam->height) {
      continue;
    }
    const auto anchors = lidar_anchors(lidar, *cam);
    std::vector<DepthAnchor> fit;
    std::vector<DepthAnchor> held_out;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      (i % cfg.camera_match.holdout_every == cfg.camera_match.holdout_every - 1 ? held_out : fit)
        .push_back(anchors[i]);
    }
    const auto metric =
      calibrate_depth_scale(img, fit, cfg.camera_match.grid_step_px, cfg.camera_match.k_anchors);
    if (!metric) {
      continue;
    }
    if (const auto err = consistency_check(*metric, held_out)) {
      out.consistency.push_back(
        {frame.radar.timestamp_ns, img.camera_id, *err, *err > cfg.camera_match.consistency_threshold});
    }
    auto points = back_project(*metric, *cam, cfg.camera_match.stride_px);
    optical.insert(optical.end(), points.begin(), points.end());
  }
  const OpticalCloud cloud(std::move(optical));
  out.w_cm = camera_match(frame.radar.detections, cloud, rig, cfg.camera_match);
  return out;
}

FrameOutput process_frame(
  std::span<const SyncedFrame> frames, std::span<const RadarFrame> scans, std::span<const VehicleState> poses,
  std::size_t index, const SensorRig & rig, const RunConfig & cfg, const std::vector<DepthImage> & depth_images)
{
  const SyncedFrame & frame = frames[index];
  const auto & detections = frame.radar.detections;
  const std::size_t n = detections.size();
  const BlindspotCone cone = cfg.blindspot.value_or(rig.blindspot);

  std::vector<CartesianPoint> radar_points;
  radar_points.reserve(n);
  for (const auto & det : detections) {
    radar_points.push_back(spherical_to_cartesian(det.position, rig.radar_mount(det.sensor_id)));
  }

  std::vector<Score> w_lm(n);
  std::vector<bool> keep(n, true);
  std::vector<CartesianPoint> lidar_points;
  if (frame.lidar && !frame.lidar->points.empty()) {
    const LidarScan scan(frame.lidar->points, rig.lidar_mount);
    lidar_points = scan.index().points();
    w_lm = lidar_match(detections, scan, rig, cfg.lidar_match);
    if (cfg.ground_filter) {
      const auto plane =
        fit_ground_plane(lidar_points, cfg.ground.iterations, cfg.ground.inlier_threshold_m, cfg.ground.seed);
      keep = filter_ground_radar(radar_points, plane, cfg.ground.margin_m);
    }
  }

  OpticalResult cam;
  if (!lidar_points.empty() && !depth_images.empty()) {
    cam = camera_branch(frame, depth_images, lidar_points, rig, cfg);
  } else {
    cam.w_cm.resize(n);
  }

  const TrackingWindow window = build_tracking_window(scans, poses, index, cfg.tracking.n_b, rig);
  const std::vector<Score> w_tr = tracking_score(window, rig, cfg.tracking);

  FrameOutput out;
  out.consistency = std::move(cam.consistency);
  out.records.resize(n);
  out.gamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    PlausibilityRecord & r = out.records[i];
    r.frame_ts_ns = frame.radar.timestamp_ns;
    r.detection_index = i;
    r.ground_filtered = !keep[i];
    // Ground returns cannot be corroborated by optical evidence.
    r.w_lm = r.ground_filtered ? Score(0.0) : w_lm[i];
    r.w_cm = r.ground_filtered ? Score(0.0) : cam.w_cm[i];
    r.w_opt = combine_optical(r.w_lm, r.w_cm, radar_points[i], cone);
    r.w_tr = w_tr[i];
    out.gamma[i] = cfg.profile.gamma_at(detections[i].position.azimuth_rad);
    const FusionResult fused = fuse_and_label(r.w_opt, r.w_tr, out.gamma[i], cfg.fusion);
    r.w_fused = fused.w_fused;
    r.y_hat = fused.y_hat;
    r.no_evidence = fused.no_evidence;
  }
  return out;
}

}  // namespace

SequenceResult run_sequence(
  std::span<const SyncedFrame> frames, const SensorRig & rig, const RunConfig & cfg, const DepthProvider * depth)
{
  cfg.validate();
  rig.validate();
  SequenceResult result;
  if (frames.empty()) {
    return result;
  }

  std::vector<RadarFrame> scans;
  std::vector<Timestamp> stamps;
  std::vector<OdometrySample> odometry;
  for (const auto & f : frames) {
    scans.push_back(f.radar);
    stamps.push_back(f.radar.timestamp_ns);
    odometry.push_back(f.odometry);
  }
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    if (stamps[i] <= stamps[i - 1]) {
      throw DataError("radar scans must have strictly increasing timestamps");
    }
  }
  const auto poses = integrate_trajectory(stamps, odometry);

  std::vector<FrameOutput> outputs(frames.size());
  std::vector<std::exception_ptr> errors(frames.size());
  std::atomic<std::size_t> next{0};
  std::mutex provider_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < frames.size(); i = next++) {
      try {
        std::vector<DepthImage> images;
        if (depth != nullptr) {
          std::unique_lock lock(provider_mutex, std::defer_lock);
          if (!depth->thread_safe()) {
            lock.lock();
          }
          for (const auto & cam : rig.cameras) {
            if (auto img = depth->depth(cam.id, stamps[i])) {
              images.push_back(std::move(*img));
            }
          }
        } else {
          images = frames[i].depth_images;
        }
        outputs[i] = process_frame(frames, scans, poses, i, rig, cfg, images);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t thread_count =
    std::min<std::size_t>(frames.size(), cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw);
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < thread_count; ++t) {
      pool.emplace_back(worker);
    }
    for (auto & t : pool) {
      t.join();
    }
  }
  for (const auto & e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  for (auto & o : outputs) {
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    result.gamma.insert(result.gamma.end(), o.gamma.begin(), o.gamma.end());
    result.consistency.insert(result.consistency.end(), o.consistency.begin(), o.consistency.end());
  }
  return result;
}

void refuse(SequenceResult & result, const FusionConfig & fusion)
{
  fusion.validate();
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    PlausibilityRecord & r = result.records[i];
    const FusionResult fused = fuse_and_label(r.w_opt, r.w_tr, result.gamma[i], fusion);
    r.w_fused = fused.w_fused;
    r.y_hat = fused.y_hat;
    r.no_evidence = fused.no_evidence;
  }
}

ConfusionMatrix confusion_against(std::span<const PlausibilityRecord> records, const FrameTruth & truth)
{
  std::map<Timestamp, std::vector<int>> predicted;
  for (const auto & r : records) {
    auto & labels = predicted[r.frame_ts_ns];
    if (r.detection_index != labels.size()) {
      throw DataError("records are not ordered by detection index");
    }
    labels.push_back(r.effective_label());
  }
  ConfusionMatrix cm;
  for (const auto & [ts, labels] : predicted) {
    const auto it = truth.find(ts);
    if (it == truth.end()) {
      throw DataError("no ground truth for frame " + std::to_string(ts));
    }
    if (it->second.size() != labels.size()) {
      throw DataError("ground truth of frame " + std::to_string(ts) + " has a different detection count");
    }
    cm += confusion(labels, it->second);
  }
  // Frames without detections contribute nothing; frames with truth but no records do.
  for (const auto & [ts, labels] : truth) {
    if (!labels.empty() && !predicted.contains(ts)) {
      throw DataError("no records for frame " + std::to_string(ts));
    }
  }
  return cm;
}

SweepGrid parse_sweep_grid(std::string_view text)
{
  SweepGrid grid;
  std::vector<double> * target = nullptr;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view token = text.substr(pos, comma - pos);
    const std::size_t eq = token.find('=');
    if (eq != std::string_view::npos) {
      const std::string_view key = token.substr(0, eq);
      if (key == "alpha") {
        target = &grid.alpha;
      } else if (key == "w0") {
        target = &grid.w0;
      } else {
        throw std::invalid_argument("grid: unknown parameter '" + std::string(key) + "'");
      }
      token = token.substr(eq + 1);
    }
    if (target == nullptr) {
      throw std::invalid_argument("grid: values before a parameter name");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw std::invalid_argument("grid: malformed value '" + std::string(token) + "'");
    }
    target->push_back(value);
    pos = comma + 1;
  }
  if (grid.alpha.empty() || grid.w0.empty()) {
    throw std::invalid_argument("grid: both alpha and w0 need at least one value");
  }
  for (const double v : grid.alpha) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("grid: alpha outside [0, 1]");
  }
  for (const double v : grid.w0) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("grid: w0 outside [0, 1]");
  }
  return grid;
}

std::vector<SweepPoint> sweep(
  const std::map<std::string, SequenceResult> & results, const std::map<std::string, FrameTruth> & truth,
  const SweepGrid & grid)
{
  for (const auto & [id, r] : results) {
    if (!truth.contains(id)) {
      throw DataError("no ground truth for sequence '" + id + "'");
    }
  }
  std::vector<SweepPoint> out;
  for (const double alpha : grid.alpha) {
    for (const double w0 : grid.w0) {
      std::map<std::string, ConfusionMatrix> per_sequence;
      for (const auto & [id, r] : results) {
        SequenceResult copy = r;
        refuse(copy, {alpha, w0});
        for (auto & rec : copy.records) {
          rec.y_corrected.reset();
        }
        per_sequence[id] = confusion_against(copy.records, truth.at(id));
      }
      out.push_back({alpha, w0, build_report(per_sequence)});
    }
  }
  return out;
}

std::string sweep_csv(std::span<const SweepPoint> points)
{
  auto cell = [](const std::optional<double> & v) { return v ? format_double(*v) : std::string(); };
  std::string out = "alpha,w0,n,acc,precision,recall,f1_plausible,miou,iou_plausible,iou_artifact\n";
  for (const auto & p : points) {
    const MetricValues & m = p.report.pooled;
    out += format_double(p.alpha) + ',' + format_double(p.w0) + ',' + std::to_string(m.n) + ',' + cell(m.accuracy) +
           ',' + cell(m.precision) + ',' + cell(m.recall) + ',' + cell(m.f1) + ',' + cell(m.mean_iou) + ',' +
           cell(m.iou_plausible) + ',' + cell(m.iou_artifact) + '\n';
  }
  return out;
}

namespace
{

std::string join_issues(const std::vector<CorrectionIssue> & issues)
{
  std::string out = "corrections rejected:";
  for (const auto & i : issues) {
    out += " [" + std::to_string(i.item) + "] " + i.message + ";";
  }
  return out;
}

}  // namespace

CorrectionRejected::CorrectionRejected(std::vector<CorrectionIssue> issues)
: DataError(join_issues(issues)), issues_(std::move(issues))
{
}

void apply_corrections(std::vector<PlausibilityRecord> & records, std::span<const Correction> corrections)
{
  std::map<std::pair<Timestamp, std::size_t>, std::size_t> lookup;
  for (std::size_t i = 0; i < records.size(); ++i) {
    lookup.emplace(std::make_pair(records[i].frame_ts_ns, records[i].detection_index), i);
  }
  std::vector<CorrectionIssue> issues;
  std::vector<std::pair<std::size_t, int>> updates;
  for (std::size_t c = 0; c < corrections.size(); ++c) {
    const Correction & corr = corrections[c];
    if (corr.y != 0 && corr.y != 1) {
      issues.push_back({c, "label must be 0 or 1"});
      continue;
    }
    const auto it = lookup.find({corr.frame_ts_ns, corr.detection_index});
    if (it == lookup.end()) {
      issues.push_back(
        {c, "unknown detection " + std::to_string(corr.detection_index) + " in frame " +
              std::to_string(corr.frame_ts_ns)});
      continue;
    }
    updates.emplace_back(it->second, corr.y);
  }
  if (!issues.empty()) {
    throw CorrectionRejected(std::move(issues));
  }
  for (const auto & [idx, y] : updates) {
    records[idx].y_corrected = y;
  }
}

void write_sequence_outputs(
  const std::filesystem::path & root, const std::string & seq_id, const SequenceResult & result,
  std::span<const Timestamp> frame_timestamps)
{
  const auto dir = layout::labels_dir(root, seq_id);
  std::filesystem::create_directories(dir);
  std::map<Timestamp, std::vector<PlausibilityRecord>> by_frame;
  for (const Timestamp ts : frame_timestamps) {
    by_frame[ts];
  }
  for (const auto & r : result.records) {
    by_frame[r.frame_ts_ns].push_back(r);
  }
  for (const auto & [ts, records] : by_frame) {
    write_file_atomic(layout::frame_file(dir, ts, ".csv"), labels_csv(records));
  }
  std::string flags = "timestamp_ns,camera_id,inconsistency,flagged\n";
  for (const auto & f : result.consistency) {
    flags += std::to_string(f.frame_ts_ns) + ',' + f.camera_id + ',' + format_double(f.inconsistency) + ',' +
             (f.flagged ? "1" : "0") + '\n';
  }
  write_file_atomic(root / seq_id / "review_flags.csv", flags);
}

std::map<Timestamp, std::vector<PlausibilityRecord>> read_sequence_labels(const std::filesystem::path & labels_dir)
{
  std::map<Timestamp, std::vector<PlausibilityRecord>> out;
  if (!std::filesystem::is_directory(labels_dir)) {
    throw DataError("no labels directory: " + labels_dir.string());
  }
  for (const Timestamp ts : list_timestamps(labels_dir, ".csv")) {
    out.emplace(ts, read_labels_csv(layout::frame_file(labels_dir, ts, ".csv"), ts));
  }
  return out;
}

std::vector<ConsistencyFlag> read_review_flags(const std::filesystem::path & path)
{
  std::vector<ConsistencyFlag> out;
  if (!std::filesystem::exists(path)) {
    return out;
  }
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "timestamp_ns,camera_id,inconsistency,flagged") {
    throw DataError(path.string() + ": unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) {
      cells.push_back(c);
    }
    if (cells.size() != 4) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
    try {
      out.push_back({std::stoll(cells[0]), cells[1], std::stod(cells[2]), cells[3] == "1"});
    } catch (const std::exception &) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return out;
}

std::string sha256_hex(std::string_view data)
{
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string dataset_hash(const DatasetManifest & manifest, const std::string & seq_id)
{
  namespace fs = std::filesystem;
  const fs::path seq_root = manifest.root / seq_id;
  std::vector<fs::path> files{layout::calibration(manifest.root), layout::odometry(manifest.root, seq_id)};
  for (const auto & sub : {layout::radar_dir(manifest.root, seq_id), layout::lidar_dir(manifest.root, seq_id),
                           layout::depth_dir(manifest.root, seq_id)}) {
    if (!fs::is_directory(sub)) {
      continue;
    }
    for (const auto & e : fs::recursive_directory_iterator(sub)) {
      if (e.is_regular_file()) {
        files.push_back(e.path());
      }
    }
  }
  std::sort(files.begin() + 2, files.end());
  std::string summary;
  for (const auto & f : files) {
    if (!fs::exists(f)) {
      continue;
    }
    summary += fs::relative(f, manifest.root).generic_string() + ' ' + sha256_hex(read_file(f)) + '\n';
  }
  return sha256_hex(summary);
}

nlohmann::json run_manifest(
  const DatasetManifest & manifest, std::span<const std::string> sequences, const RunConfig & cfg)
{
  const nlohmann::json config = run_config_to_json(cfg);
  nlohmann::json seqs = nlohmann::json::object();
  for (const auto & id : sequences) {
    seqs[id] = dataset_hash(manifest, id);
  }
  return {{"config", config}, {"config_sha256", sha256_hex(config.dump())}, {"dataset_sha256", seqs}};
}

}  // namespace ralf

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

#include "ralf/review_api.hpp"

#include "ralf/pipeline.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>

namespace ralf::review
{

namespace fs = std::filesystem;

namespace
{

nlohmann::json error_body(std::string_view code, std::string_view message)
{
  return {{"error", code}, {"message", message}};
}

nlohmann::json score_json(const Score & s) { return s ? nlohmann::json(*s) : nlohmann::json(nullptr); }

}  // namespace

ReviewService::ReviewService(fs::path dataset_root, IngestOptions options)
: manifest_(open_dataset(dataset_root)), options_(options)
{
}

bool ReviewService::has_frame(const std::string & seq, Timestamp ts) const
{
  if (std::find(manifest_.sequences.begin(), manifest_.sequences.end(), seq) == manifest_.sequences.end()) {
    return false;
  }
  return fs::exists(layout::frame_file(layout::radar_dir(manifest_.root, seq), ts, ".csv"));
}

Response ReviewService::sequences() const
{
  nlohmann::json list = nlohmann::json::array();
  for (const auto & id : manifest_.sequences) {
    const auto frames = list_timestamps(layout::radar_dir(manifest_.root, id), ".csv");
    std::size_t reviewed = 0;
    const fs::path labels = layout::labels_dir(manifest_.root, id);
    if (fs::is_directory(labels)) {
      for (const auto & [ts, records] : read_sequence_labels(labels)) {
        reviewed += std::any_of(records.begin(), records.end(),
                                [](const PlausibilityRecord & r) { return r.y_corrected.has_value(); });
      }
    }
    list.push_back({{"id", id}, {"frame_count", frames.size()}, {"reviewed_count", reviewed}});
  }
  return {200, list};
}

Response ReviewService::frame(const std::string & seq, Timestamp ts) const
{
  if (!has_frame(seq, ts)) {
    return {404, error_body("not_found", "unknown frame " + seq + "/" + std::to_string(ts))};
  }
  const SensorRig & rig = manifest_.calibration;
  const RadarFrame radar = read_radar_csv(layout::frame_file(layout::radar_dir(manifest_.root, seq), ts, ".csv"), ts);
  const fs::path label_file = layout::frame_file(layout::labels_dir(manifest_.root, seq), ts, ".csv");
  std::vector<PlausibilityRecord> records;
  const bool labeled = fs::exists(label_file);
  if (labeled) {
    records = read_labels_csv(label_file, ts);
    if (records.size() != radar.detections.size()) {
      return {409, error_body("stale_labels", "labels do not match the radar scan")};
    }
  }

  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < radar.detections.size(); ++i) {
    const RadarDetection & det = radar.detections[i];
    const CartesianPoint p = spherical_to_cartesian(det.position, rig.radar_mount(det.sensor_id));
    nlohmann::json point = {
      {"detection_index", i},
      {"sensor_id", det.sensor_id},
      {"x_m", p.x_m},
      {"y_m", p.y_m},
      {"z_m", p.z_m},
      {"range_m", det.position.range_m},
      {"azimuth_rad", det.position.azimuth_rad},
      {"elevation_rad", det.position.elevation_rad},
      {"doppler_mps", det.doppler_mps},
      {"power_db", det.power_db},
    };
    if (labeled) {
      const PlausibilityRecord & r = records[i];
      point["w_lm"] = score_json(r.w_lm);
      point["w_cm"] = score_json(r.w_cm);
      point["w_opt"] = score_json(r.w_opt);
      point["w_tr"] = score_json(r.w_tr);
      point["w_fused"] = r.w_fused;
      point["y_hat"] = r.y_hat;
      point["y_corrected"] = r.y_corrected ? nlohmann::json(*r.y_corrected) : nlohmann::json(nullptr);
    } else {
      for (const char * key : {"w_lm", "w_cm", "w_opt", "w_tr", "w_fused", "y_hat", "y_corrected"}) {
        point[key] = nullptr;
      }
    }
    points.push_back(std::move(point));
  }

  nlohmann::json lidar = {{"timestamp_ns", nullptr}, {"total", 0}, {"stride", 1}, {"points", nlohmann::json::array()}};
  const auto lidar_ts = list_timestamps(layout::lidar_dir(manifest_.root, seq), ".csv");
  if (const auto li = nearest_within(lidar_ts, ts, options_.sync_tolerance_ns)) {
    const LidarFrame scan =
      read_lidar_csv(layout::frame_file(layout::lidar_dir(manifest_.root, seq), lidar_ts[*li], ".csv"), lidar_ts[*li]);
    const std::size_t n = scan.points.size();
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxLidarPoints - 1) / kMaxLidarPoints);
    lidar["timestamp_ns"] = scan.timestamp_ns;
    lidar["total"] = n;
    lidar["stride"] = stride;
    for (std::size_t i = 0; i < n; i += stride) {
      const CartesianPoint p = spherical_to_cartesian(scan.points[i], rig.lidar_mount);
      lidar["points"].push_back({p.x_m, p.y_m, p.z_m});
    }
  }

  nlohmann::json consistency = nlohmann::json::array();
  bool flagged = false;
  for (const auto & f : read_review_flags(manifest_.root / seq / "review_flags.csv")) {
    if (f.frame_ts_ns == ts) {
      consistency.push_back({{"camera_id", f.camera_id}, {"inconsistency", f.inconsistency}, {"flagged", f.flagged}});
      flagged = flagged || f.flagged;
    }
  }

  return {200,
          {{"sequence", seq},
           {"frame_ts_ns", ts},
           {"labeled", labeled},
           {"radar", points},
           {"lidar", lidar},
           {"consistency_flag", flagged},
           {"consistency", consistency}}};
}

std::shared_ptr<std::mutex> ReviewService::frame_mutex(const fs::path & file)
{
  std::lock_guard lock(registry_mutex_);
  auto & m = frame_mutexes_[file];
  if (!m) {
    m = std::make_shared<std::mutex>();
  }
  return m;
}

Response ReviewService::post_labels(const std::string & seq, Timestamp ts, std::string_view body)
{
  if (!has_frame(seq, ts)) {
    return {404, error_body("not_found", "unknown frame " + seq + "/" + std::to_string(ts))};
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error & e) {
    return {400, error_body("bad_request", e.what())};
  }
  if (!j.is_array()) {
    return {400, error_body("bad_request", "expected a list of {detection_index, y}")};
  }

  std::vector<Correction> corrections;
  nlohmann::json invalid = nlohmann::json::array();
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto & item = j[i];
    const bool well_formed = item.is_object() && item.size() == 2 && item.contains("detection_index") &&
                             item.contains("y") && item["detection_index"].is_number_unsigned() &&
                             item["y"].is_number_integer();
    if (!well_formed) {
      invalid.push_back({{"item", i}, {"message", "expected {detection_index: uint, y: 0|1}"}});
      continue;
    }
    corrections.push_back({ts, item["detection_index"].get<std::size_t>(), item["y"].get<int>()});
  }
  if (!invalid.empty()) {
    return {422, {{"error", "invalid_corrections"}, {"invalid", invalid}}};
  }

  const fs::path file = layout::frame_file(layout::labels_dir(manifest_.root, seq), ts, ".csv");
  const auto mutex = frame_mutex(file);
  std::lock_guard lock(*mutex);
  if (!fs::exists(file)) {
    return {409, error_body("not_labeled", "frame has no labels yet")};
  }
  auto records = read_labels_csv(file, ts);
  try {
    apply_corrections(records, corrections);
  } catch (const CorrectionRejected & e) {
    for (const auto & issue : e.issues()) {
      invalid.push_back(
        {{"item", issue.item}, {"detection_index", corrections[issue.item].detection_index}, {"message", issue.message}});
    }
    return {422, {{"error", "invalid_corrections"}, {"invalid", invalid}}};
  }
  write_file_atomic(file, labels_csv(records));
  return {200, {{"ok", true}, {"applied", corrections.size()}}};
}

struct ReviewServer::Impl
{
  httplib::Server server;
};

namespace
{

void send(httplib::Response & res, const Response & r)
{
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<Timestamp> parse_ts(const std::string & s)
{
  Timestamp ts = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), ts);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return ts;
}

}  // namespace

ReviewServer::ReviewServer(ReviewService & service, std::optional<fs::path> ui_dir) : impl_(std::make_unique<Impl>())
{
  auto & svr = impl_->server;
  svr.Get("/api/sequences", [&service](const httplib::Request &, httplib::Response & res) {
    send(res, service.sequences());
  });
  svr.Get(R"(/api/frame/([^/]+)/([^/]+))", [&service](const httplib::Request & req, httplib::Response & res) {
    const auto ts = parse_ts(req.matches[2]);
    send(res, ts ? service.frame(req.matches[1], *ts) : Response{404, error_body("not_found", "bad timestamp")});
  });
  svr.Post(R"(/api/frame/([^/]+)/([^/]+)/labels)", [&service](const httplib::Request & req, httplib::Response & res) {
    const auto ts = parse_ts(req.matches[2]);
    send(res, ts ? service.post_labels(req.matches[1], *ts, req.body)
                 : Response{404, error_body("not_found", "bad timestamp")});
  });
  svr.set_exception_handler([](const httplib::Request &, httplib::Response & res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception & e) {
      message = e.what();
    } catch (...) {
    }
    send(res, {500, error_body("internal", message)});
  });
  if (ui_dir && fs::is_directory(*ui_dir)) {
    svr.set_mount_point("/", ui_dir->string());
  }
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string & host, int port)
{
  if (port == 0) {
    return impl_->server.bind_to_any_port(host);
  }
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() { impl_->server.stop(); }

}  // namespace ralf::review

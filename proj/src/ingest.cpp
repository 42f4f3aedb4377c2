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

#include "ralf/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ralf
{

namespace layout
{
fs::path calibration(const fs::path & root) { return root / "calibration.json"; }
fs::path radar_dir(const fs::path & root, std::string_view seq) { return root / seq / "radar"; }
fs::path lidar_dir(const fs::path & root, std::string_view seq) { return root / seq / "lidar"; }
fs::path depth_dir(const fs::path & root, std::string_view seq) { return root / seq / "depth"; }
fs::path odometry(const fs::path & root, std::string_view seq) { return root / seq / "odom.csv"; }
fs::path labels_dir(const fs::path & root, std::string_view seq) { return root / seq / "labels"; }
fs::path truth_dir(const fs::path & root, std::string_view seq) { return root / seq / "truth"; }
fs::path frame_file(const fs::path & dir, Timestamp ts, std::string_view extension)
{
  return dir / (std::to_string(ts) + std::string(extension));
}
}  // namespace layout

std::string format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace
{

constexpr std::string_view kRadarHeader = "range_m,azimuth_rad,elevation_rad,doppler_mps,power_db,sensor_id";
constexpr std::string_view kLidarHeader = "range_m,azimuth_rad,elevation_rad";
constexpr std::string_view kOdomHeader = "timestamp_ns,speed_mps,yaw_rate_radps";
constexpr std::string_view kLabelsHeader = "detection_index,w_lm,w_cm,w_opt,w_tr,w_fused,y_hat,y_corrected";

/// Line-oriented CSV reader that reports errors as "file:line: message".
class CsvReader
{
public:
  CsvReader(const fs::path & path, std::string_view header) : path_(path), in_(path)
  {
    if (!in_) {
      throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!next_line(line) || line != header) {
      fail("expected header '" + std::string(header) + "'");
    }
  }

  bool next(std::vector<std::string_view> & fields)
  {
    if (!next_line(line_)) {
      return false;
    }
    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line_.find(',', start);
      fields.emplace_back(std::string_view(line_).substr(start, comma - start));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    return true;
  }

  void expect_fields(const std::vector<std::string_view> & fields, std::size_t n) const
  {
    if (fields.size() != n) {
      fail("expected " + std::to_string(n) + " fields, got " + std::to_string(fields.size()));
    }
  }

  double real(std::string_view s) const
  {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail("invalid number '" + std::string(s) + "'");
    }
    return v;
  }

  std::int64_t integer(std::string_view s) const
  {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      fail("invalid integer '" + std::string(s) + "'");
    }
    return v;
  }

  Score optional_real(std::string_view s) const
  {
    if (s.empty()) {
      return std::nullopt;
    }
    return real(s);
  }

  [[noreturn]] void fail(const std::string & msg) const
  {
    throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + msg);
  }

private:
  bool next_line(std::string & line)
  {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      if (!line.empty()) {
        return true;
      }
    }
    return false;
  }

  fs::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_{0};
};

void write_file(const fs::path & path, std::string_view content)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

Timestamp parse_timestamp_stem(const fs::path & file)
{
  const std::string stem = file.stem().string();
  Timestamp ts = 0;
  const auto res = std::from_chars(stem.data(), stem.data() + stem.size(), ts);
  if (res.ec != std::errc{} || res.ptr != stem.data() + stem.size()) {
    throw DataError("file name is not a timestamp: " + file.string());
  }
  return ts;
}

}  // namespace

void write_file_atomic(const fs::path & path, std::string_view content)
{
  static std::atomic<std::uint64_t> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  write_file(tmp, content);
  fs::rename(tmp, path);
}

std::string read_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

InterpolatedOdometry interpolate_odometry(std::span<const OdometrySample> samples, Timestamp t)
{
  if (samples.empty()) {
    throw DataError("no odometry samples");
  }
  if (t < samples.front().timestamp_ns) {
    return {{t, samples.front().speed_mps, samples.front().yaw_rate_radps}, true};
  }
  if (t > samples.back().timestamp_ns) {
    return {{t, samples.back().speed_mps, samples.back().yaw_rate_radps}, true};
  }
  const auto it = std::lower_bound(
    samples.begin(), samples.end(), t,
    [](const OdometrySample & s, Timestamp value) { return s.timestamp_ns < value; });
  if (it->timestamp_ns == t) {
    return {*it, false};
  }
  const OdometrySample & hi = *it;
  const OdometrySample & lo = *std::prev(it);
  const double f = static_cast<double>(t - lo.timestamp_ns) /
                   static_cast<double>(hi.timestamp_ns - lo.timestamp_ns);
  return {
    {t, lo.speed_mps + f * (hi.speed_mps - lo.speed_mps),
     lo.yaw_rate_radps + f * (hi.yaw_rate_radps - lo.yaw_rate_radps)},
    false};
}

std::vector<Timestamp> list_timestamps(const fs::path & dir, std::string_view extension)
{
  std::vector<Timestamp> out;
  if (!fs::is_directory(dir)) {
    return out;
  }
  for (const auto & entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      out.push_back(parse_timestamp_stem(entry.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::size_t> nearest_within(
  std::span<const Timestamp> sorted, Timestamp t, Timestamp tolerance)
{
  if (sorted.empty()) {
    return std::nullopt;
  }
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  std::size_t best = static_cast<std::size_t>(std::distance(sorted.begin(), it));
  if (best == sorted.size()) {
    best = sorted.size() - 1;
  } else if (best > 0 && t - sorted[best - 1] <= sorted[best] - t) {
    best = best - 1;
  }
  const Timestamp gap = sorted[best] > t ? sorted[best] - t : t - sorted[best];
  if (gap > tolerance) {
    return std::nullopt;
  }
  return best;
}

DatasetManifest open_dataset(const fs::path & root)
{
  if (!fs::is_directory(root)) {
    throw DataError("dataset root does not exist: " + root.string());
  }
  DatasetManifest manifest;
  manifest.root = root;
  manifest.calibration = load_rig(layout::calibration(root));
  for (const auto & entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::is_directory(entry.path() / "radar")) {
      manifest.sequences.push_back(entry.path().filename().string());
    }
  }
  std::sort(manifest.sequences.begin(), manifest.sequences.end());
  return manifest;
}

std::vector<SyncedFrame> load_sequence(
  const DatasetManifest & manifest, const std::string & seq_id, const IngestOptions & options)
{
  const fs::path & root = manifest.root;
  if (!fs::is_directory(layout::radar_dir(root, seq_id))) {
    throw DataError("unknown sequence '" + seq_id + "' in " + root.string());
  }
  const auto radar_ts = list_timestamps(layout::radar_dir(root, seq_id), ".csv");
  if (radar_ts.empty()) {
    return {};
  }
  const auto lidar_ts = list_timestamps(layout::lidar_dir(root, seq_id), ".csv");
  const auto odometry = read_odometry_csv(layout::odometry(root, seq_id));

  struct CameraStream
  {
    std::string id;
    fs::path dir;
    std::vector<Timestamp> stamps;
  };
  std::vector<CameraStream> cameras;
  if (options.load_depth) {
    for (const auto & cam : manifest.calibration.cameras) {
      const fs::path dir = layout::depth_dir(root, seq_id) / cam.id;
      cameras.push_back({cam.id, dir, list_timestamps(dir, ".pgm")});
    }
  }

  std::vector<SyncedFrame> frames;
  frames.reserve(radar_ts.size());
  for (const Timestamp ts : radar_ts) {
    SyncedFrame frame;
    frame.radar = read_radar_csv(layout::frame_file(layout::radar_dir(root, seq_id), ts, ".csv"), ts);
    for (const auto & det : frame.radar.detections) {
      manifest.calibration.radar_mount(det.sensor_id);  // unknown sensors are a data error
    }
    if (const auto li = nearest_within(lidar_ts, ts, options.sync_tolerance_ns)) {
      const Timestamp lts = lidar_ts[*li];
      frame.lidar = read_lidar_csv(layout::frame_file(layout::lidar_dir(root, seq_id), lts, ".csv"), lts);
    }
    for (const auto & cam : cameras) {
      if (const auto ci = nearest_within(cam.stamps, ts, options.sync_tolerance_ns)) {
        frame.depth_images.push_back(
          read_depth_pgm(layout::frame_file(cam.dir, cam.stamps[*ci], ".pgm"), cam.id));
      }
    }
    const auto odom = interpolate_odometry(odometry, ts);
    frame.odometry = odom.sample;
    frame.odometry_extrapolated = odom.extrapolated;
    frames.push_back(std::move(frame));
  }
  return frames;
}

RadarFrame read_radar_csv(const fs::path & path, Timestamp ts)
{
  CsvReader reader(path, kRadarHeader);
  RadarFrame frame;
  frame.timestamp_ns = ts;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    reader.expect_fields(f, 6);
    RadarDetection det;
    det.position.range_m = reader.real(f[0]);
    det.position.azimuth_rad = reader.real(f[1]);
    det.position.elevation_rad = reader.real(f[2]);
    det.doppler_mps = reader.real(f[3]);
    det.power_db = reader.real(f[4]);
    det.sensor_id = std::string(f[5]);
    if (det.position.range_m < 0.0) {
      reader.fail("negative range");
    }
    frame.detections.push_back(std::move(det));
  }
  return frame;
}

void write_radar_csv(const fs::path & path, const RadarFrame & frame)
{
  std::string out(kRadarHeader);
  out += '\n';
  for (const auto & d : frame.detections) {
    out += format_double(d.position.range_m) + ',' + format_double(d.position.azimuth_rad) + ',' +
           format_double(d.position.elevation_rad) + ',' + format_double(d.doppler_mps) + ',' +
           format_double(d.power_db) + ',' + d.sensor_id + '\n';
  }
  write_file(path, out);
}

LidarFrame read_lidar_csv(const fs::path & path, Timestamp ts)
{
  CsvReader reader(path, kLidarHeader);
  LidarFrame frame;
  frame.timestamp_ns = ts;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    reader.expect_fields(f, 3);
    SphericalPoint p{reader.real(f[0]), reader.real(f[1]), reader.real(f[2])};
    if (p.range_m < 0.0) {
      reader.fail("negative range");
    }
    frame.points.push_back(p);
  }
  return frame;
}

void write_lidar_csv(const fs::path & path, const LidarFrame & frame)
{
  std::string out(kLidarHeader);
  out += '\n';
  for (const auto & p : frame.points) {
    out += format_double(p.range_m) + ',' + format_double(p.azimuth_rad) + ',' +
           format_double(p.elevation_rad) + '\n';
  }
  write_file(path, out);
}

std::vector<OdometrySample> read_odometry_csv(const fs::path & path)
{
  CsvReader reader(path, kOdomHeader);
  std::vector<OdometrySample> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    reader.expect_fields(f, 3);
    OdometrySample s{reader.integer(f[0]), reader.real(f[1]), reader.real(f[2])};
    if (!out.empty() && s.timestamp_ns <= out.back().timestamp_ns) {
      reader.fail("odometry timestamps must be strictly increasing");
    }
    out.push_back(s);
  }
  return out;
}

void write_odometry_csv(const fs::path & path, std::span<const OdometrySample> samples)
{
  std::string out(kOdomHeader);
  out += '\n';
  for (const auto & s : samples) {
    out += std::to_string(s.timestamp_ns) + ',' + format_double(s.speed_mps) + ',' +
           format_double(s.yaw_rate_radps) + '\n';
  }
  write_file(path, out);
}

namespace
{

fs::path meta_path(const fs::path & pgm)
{
  fs::path meta = pgm;
  meta.replace_extension(".meta");
  return meta;
}

}  // namespace

DepthImage read_depth_pgm(const fs::path & path, std::string camera_id)
{
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string & msg) -> void {
    throw DataError(path.string() + ": " + msg);
  };
  auto skip_space = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') {
          ++pos;
        }
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() {
    skip_space();
    int v = 0;
    const auto res = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
    if (res.ec != std::errc{}) {
      fail("malformed PGM header");
    }
    pos = static_cast<std::size_t>(res.ptr - bytes.data());
    return v;
  };

  if (bytes.compare(0, 2, "P5") != 0) {
    fail("not a binary PGM (P5)");
  }
  pos = 2;
  const int width = read_int();
  const int height = read_int();
  const int maxval = read_int();
  if (width <= 0 || height <= 0 || maxval <= 255 || maxval > 65535) {
    fail("expected a 16-bit PGM with positive size");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < pos + 2 * count) {
    fail("truncated raster");
  }

  double scale = 1.0 / maxval;
  const fs::path meta = meta_path(path);
  if (fs::exists(meta)) {
    std::istringstream in(read_file(meta));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos && line.substr(0, eq) == "scale_hint") {
        const std::string value = line.substr(eq + 1);
        const auto res = std::from_chars(value.data(), value.data() + value.size(), scale);
        if (res.ec != std::errc{} || !(scale > 0.0)) {
          throw DataError(meta.string() + ": invalid scale_hint");
        }
      }
    }
  }

  DepthImage image;
  image.camera_id = std::move(camera_id);
  image.width = width;
  image.height = height;
  image.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
    image.values[i] = static_cast<double>((hi << 8) | lo) * scale;
  }
  return image;
}

void write_depth_pgm(const fs::path & path, const DepthImage & image)
{
  double max_value = 0.0;
  for (const double v : image.values) {
    max_value = std::max(max_value, v);
  }
  const double scale = max_value > 0.0 ? max_value / 65535.0 : 1.0;

  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n65535\n";
  out.reserve(out.size() + 2 * image.values.size());
  for (const double v : image.values) {
    const long sample = v > 0.0 ? std::clamp(std::lround(v / scale), 1L, 65535L) : 0L;
    out.push_back(static_cast<char>((sample >> 8) & 0xff));
    out.push_back(static_cast<char>(sample & 0xff));
  }
  write_file(path, out);
  write_file(meta_path(path), "scale_hint=" + format_double(scale) + "\n");
}

std::vector<PlausibilityRecord> read_labels_csv(const fs::path & path, Timestamp ts)
{
  CsvReader reader(path, kLabelsHeader);
  std::vector<PlausibilityRecord> out;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    reader.expect_fields(f, 8);
    PlausibilityRecord r;
    r.frame_ts_ns = ts;
    const auto index = reader.integer(f[0]);
    if (index < 0) {
      reader.fail("negative detection index");
    }
    r.detection_index = static_cast<std::size_t>(index);
    r.w_lm = reader.optional_real(f[1]);
    r.w_cm = reader.optional_real(f[2]);
    r.w_opt = reader.optional_real(f[3]);
    r.w_tr = reader.optional_real(f[4]);
    r.w_fused = reader.real(f[5]);
    r.y_hat = static_cast<int>(reader.integer(f[6]));
    if (!f[7].empty()) {
      r.y_corrected = static_cast<int>(reader.integer(f[7]));
    }
    if ((r.y_hat != 0 && r.y_hat != 1) || (r.y_corrected && *r.y_corrected != 0 && *r.y_corrected != 1)) {
      reader.fail("labels must be 0 or 1");
    }
    r.no_evidence = !r.w_opt && !r.w_tr;
    out.push_back(r);
  }
  return out;
}

std::string labels_csv(std::span<const PlausibilityRecord> records)
{
  auto opt = [](const Score & s) { return s ? format_double(*s) : std::string(); };
  std::string out(kLabelsHeader);
  out += '\n';
  for (const auto & r : records) {
    out += std::to_string(r.detection_index) + ',' + opt(r.w_lm) + ',' + opt(r.w_cm) + ',' +
           opt(r.w_opt) + ',' + opt(r.w_tr) + ',' + format_double(r.w_fused) + ',' +
           std::to_string(r.y_hat) + ',' +
           (r.y_corrected ? std::to_string(*r.y_corrected) : std::string()) + '\n';
  }
  return out;
}

}  // namespace ralf

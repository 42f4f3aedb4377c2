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

#include "ralf/cli.hpp"

#include "ralf/ingest.hpp"
#include "ralf/metrics.hpp"
#include "ralf/pipeline.hpp"
#include "ralf/review_api.hpp"
#include "ralf/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <sstream>

namespace ralf::cli
{

namespace fs = std::filesystem;

namespace
{

struct Options
{
  std::string dataset;
  std::string config;
  std::vector<std::string> seqs;
  std::string out;
  std::string spec;
  std::string grid{"alpha=0,0.25,0.5,0.75,1,w0=0.1,0.3,0.5,0.7,0.9"};
  std::string labels;
  std::string truth{"generated"};
  std::string format{"csv"};
  std::string host{"127.0.0.1"};
  std::string ui;
  int port{8080};
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> w0;
  std::optional<int> threads;
};

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

RunConfig resolve_config(const Options & o)
{
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.alpha) cfg.fusion.alpha = *o.alpha;
  if (o.w0) cfg.fusion.w0 = *o.w0;
  if (o.threads) cfg.threads = *o.threads;
  try {
    cfg.validate();
  } catch (const std::invalid_argument & e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::vector<std::string> selected_sequences(const DatasetManifest & m, const std::vector<std::string> & requested)
{
  if (requested.empty()) {
    return m.sequences;
  }
  for (const auto & s : requested) {
    if (std::find(m.sequences.begin(), m.sequences.end(), s) == m.sequences.end()) {
      throw DataError("unknown sequence '" + s + "'");
    }
  }
  return requested;
}

std::map<std::string, SequenceResult> run_all(
  const DatasetManifest & manifest, const std::vector<std::string> & seqs, const RunConfig & cfg,
  std::map<std::string, std::vector<Timestamp>> * stamps = nullptr)
{
  std::map<std::string, SequenceResult> results;
  IngestOptions ingest;
  ingest.sync_tolerance_ns = cfg.sync_tolerance_ns;
  for (const auto & id : seqs) {
    const auto frames = load_sequence(manifest, id, ingest);
    results[id] = run_sequence(frames, manifest.calibration, cfg);
    if (stamps != nullptr) {
      auto & s = (*stamps)[id];
      for (const auto & f : frames) {
        s.push_back(f.radar.timestamp_ns);
      }
    }
  }
  return results;
}

// Reviewer labels already on disk are carried over when the scan layout is unchanged.
void keep_corrections(const fs::path & labels_dir, SequenceResult & result)
{
  if (!fs::is_directory(labels_dir)) {
    return;
  }
  const auto existing = read_sequence_labels(labels_dir);
  std::map<Timestamp, std::size_t> counts;
  for (const auto & r : result.records) {
    ++counts[r.frame_ts_ns];
  }
  for (auto & r : result.records) {
    const auto it = existing.find(r.frame_ts_ns);
    if (it != existing.end() && it->second.size() == counts[r.frame_ts_ns]) {
      r.y_corrected = it->second[r.detection_index].y_corrected;
    }
  }
}

int cmd_synth(const Options & o, std::ostream & out)
{
  synth::SceneSpec spec = synth::load_scene_spec(o.spec);
  if (o.seed) {
    // Re-parse so the depth scales follow the overriding seed too.
    auto j = nlohmann::json::parse(read_file(o.spec));
    j["seed"] = *o.seed;
    spec = synth::scene_from_json(j);
  }
  const auto manifest = synth::generate_dataset(spec, o.out);
  out << "wrote " << manifest.sequences.size() << " sequence(s) to " << o.out << "\n";
  return kExitOk;
}

int cmd_run(const Options & o, std::ostream & out)
{
  const RunConfig cfg = resolve_config(o);
  const auto manifest = open_dataset(o.dataset);
  const auto seqs = selected_sequences(manifest, o.seqs);
  const fs::path root = o.out.empty() ? fs::path(o.dataset) : fs::path(o.out);
  std::map<std::string, std::vector<Timestamp>> stamps;
  auto results = run_all(manifest, seqs, cfg, &stamps);
  for (auto & [id, result] : results) {
    keep_corrections(layout::labels_dir(root, id), result);
    write_sequence_outputs(root, id, result, stamps[id]);
    out << id << ": " << stamps[id].size() << " frames, " << result.records.size() << " detections\n";
  }
  write_file_atomic(root / "run_manifest.json", run_manifest(manifest, seqs, cfg).dump(2) + "\n");
  return kExitOk;
}

// Predictions and truth per sequence for eval.
std::map<std::string, ConfusionMatrix> evaluate(const Options & o)
{
  if (o.truth != "corrected" && o.truth != "generated") {
    throw UsageError("--truth must be 'corrected' or 'generated'");
  }
  std::vector<std::pair<std::string, fs::path>> targets;
  if (!o.labels.empty()) {
    const fs::path dir = fs::path(o.labels).lexically_normal();
    const fs::path trimmed = dir.filename().empty() ? dir.parent_path() : dir;
    targets.emplace_back(trimmed.parent_path().filename().string(), trimmed);
  } else {
    const auto manifest = open_dataset(o.dataset);
    for (const auto & id : selected_sequences(manifest, o.seqs)) {
      targets.emplace_back(id, layout::labels_dir(o.dataset, id));
    }
  }
  std::map<std::string, ConfusionMatrix> per_sequence;
  for (const auto & [id, dir] : targets) {
    const auto labels = read_sequence_labels(dir);
    std::vector<PlausibilityRecord> records;
    FrameTruth truth;
    for (const auto & [ts, frame] : labels) {
      auto & t = truth[ts];
      for (const auto & r : frame) {
        t.push_back(r.effective_label());
        records.push_back(r);
      }
    }
    if (o.truth == "generated") {
      if (o.dataset.empty()) {
        throw UsageError("--truth generated needs --dataset");
      }
      truth = synth::ground_truth(o.dataset, id);
    } else {
      // Reviewer labels are the truth; the predictions under test are the raw ones.
      for (auto & r : records) {
        r.y_corrected.reset();
      }
    }
    per_sequence[id] = confusion_against(records, truth);
  }
  return per_sequence;
}

void emit(const Options & o, std::ostream & out, const std::string & content)
{
  if (o.out.empty()) {
    out << content;
  } else {
    write_file_atomic(o.out, content);
  }
}

int cmd_eval(const Options & o, std::ostream & out)
{
  if (o.format != "csv" && o.format != "json") {
    throw UsageError("--format must be 'csv' or 'json'");
  }
  const MetricReport report = build_report(evaluate(o));
  emit(o, out, o.format == "csv" ? report_csv(report) : report_json(report).dump(2) + "\n");
  return kExitOk;
}

int cmd_sweep(const Options & o, std::ostream & out)
{
  SweepGrid grid;
  try {
    grid = parse_sweep_grid(o.grid);
  } catch (const std::invalid_argument & e) {
    throw UsageError(e.what());
  }
  if (o.truth != "corrected" && o.truth != "generated") {
    throw UsageError("--truth must be 'corrected' or 'generated'");
  }
  const RunConfig cfg = resolve_config(o);
  const auto manifest = open_dataset(o.dataset);
  const auto seqs = selected_sequences(manifest, o.seqs);
  const auto results = run_all(manifest, seqs, cfg);
  std::map<std::string, FrameTruth> truth;
  for (const auto & id : seqs) {
    if (o.truth == "generated") {
      truth[id] = synth::ground_truth(o.dataset, id);
    } else {
      for (const auto & [ts, frame] : read_sequence_labels(layout::labels_dir(o.dataset, id))) {
        auto & t = truth[id][ts];
        for (const auto & r : frame) {
          t.push_back(r.effective_label());
        }
      }
    }
  }
  emit(o, out, sweep_csv(sweep(results, truth, grid)));
  return kExitOk;
}

review::ReviewServer * g_server = nullptr;

void on_signal(int)
{
  if (g_server != nullptr) {
    g_server->stop();
  }
}

int cmd_serve(const Options & o, std::ostream & out)
{
  review::ReviewService service(o.dataset);
  std::optional<fs::path> ui;
  if (!o.ui.empty()) {
    ui = fs::path(o.ui);
  }
  review::ReviewServer server(service, ui);
  const int port = server.bind(o.host, o.port);
  if (port < 0) {
    throw DataError("cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  out << "serving " << o.dataset << " on http://" << o.host << ":" << port << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

int cmd_export(const Options & o, std::ostream & out)
{
  const auto manifest = open_dataset(o.dataset);
  const auto seqs = selected_sequences(manifest, o.seqs);
  const fs::path root(o.out);
  fs::create_directories(root);
  save_rig(manifest.calibration, layout::calibration(root));
  for (const auto & id : seqs) {
    const auto labels = read_sequence_labels(layout::labels_dir(o.dataset, id));
    fs::create_directories(root / id);
    std::size_t count = 0;
    for (const auto & [ts, records] : labels) {
      const RadarFrame radar = read_radar_csv(layout::frame_file(layout::radar_dir(o.dataset, id), ts, ".csv"), ts);
      if (radar.detections.size() != records.size()) {
        throw DataError("labels of " + id + "/" + std::to_string(ts) + " do not match the radar scan");
      }
      std::string csv = "range_m,azimuth_rad,elevation_rad,doppler_mps,power_db,sensor_id,x_m,y_m,z_m,y\n";
      for (std::size_t i = 0; i < records.size(); ++i) {
        const RadarDetection & d = radar.detections[i];
        const CartesianPoint p = spherical_to_cartesian(d.position, manifest.calibration.radar_mount(d.sensor_id));
        csv += format_double(d.position.range_m) + ',' + format_double(d.position.azimuth_rad) + ',' +
               format_double(d.position.elevation_rad) + ',' + format_double(d.doppler_mps) + ',' +
               format_double(d.power_db) + ',' + d.sensor_id + ',' + format_double(p.x_m) + ',' +
               format_double(p.y_m) + ',' + format_double(p.z_m) + ',' +
               std::to_string(records[i].effective_label()) + '\n';
      }
      write_file_atomic(layout::frame_file(root / id, ts, ".csv"), csv);
      ++count;
    }
    out << id << ": exported " << count << " frames\n";
  }
  return kExitOk;
}

void add_config_flags(CLI::App * app, Options & o)
{
  app->add_option("--config", o.config, "Run configuration file (JSON)")->check(CLI::ExistingFile);
  app->add_option("--alpha", o.alpha, "Optical branch weight in [0, 1]; overrides the config file");
  app->add_option("--w0", o.w0, "Plausibility threshold in [0, 1]; overrides the config file");
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

}  // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  Options o;
  CLI::App app{"Radar auto-labeling from LiDAR, camera depth and radar tracking", "ralf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  auto * synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  synth->add_option("--spec", o.spec, "Scene specification file (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", o.out, "Output dataset directory")->required();
  synth->add_option("--seed", o.seed, "Random seed; overrides the scene file");

  auto * run_cmd = app.add_subcommand("run", "Label a dataset; writes <out>/<seq>/labels/<timestamp_ns>.csv");
  run_cmd->add_option("--dataset", o.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--seq", o.seqs, "Sequence id (repeatable; default: all)");
  run_cmd->add_option("--out", o.out, "Output root (default: the dataset directory)");
  add_config_flags(run_cmd, o);

  auto * eval = app.add_subcommand("eval", "Metrics of labels against ground truth");
  eval->add_option("--dataset", o.dataset, "Dataset directory");
  eval->add_option("--labels", o.labels, "Labels directory of one sequence (default: every sequence in --dataset)");
  eval->add_option("--seq", o.seqs, "Sequence id (repeatable; default: all)");
  eval->add_option("--truth", o.truth,
                   "'generated': synthetic truth vs. effective labels; 'corrected': reviewer labels vs. predictions");
  eval->add_option("--format", o.format, "csv or json");
  eval->add_option("--out", o.out, "Report file (default: stdout)");

  auto * sweep_cmd = app.add_subcommand("sweep", "Metrics over a grid of alpha and w0");
  sweep_cmd->add_option("--dataset", o.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--seq", o.seqs, "Sequence id (repeatable; default: all)");
  sweep_cmd->add_option("--grid", o.grid, "Grid as alpha=a1,a2,...,w0=t1,t2,... (dimensionless, in [0, 1])");
  sweep_cmd->add_option("--truth", o.truth, "'generated' or 'corrected'");
  sweep_cmd->add_option("--out", o.out, "Report file (default: stdout)");
  add_config_flags(sweep_cmd, o);

  auto * serve = app.add_subcommand("serve", "Serve the review API over HTTP");
  serve->add_option("--dataset", o.dataset, "Labeled dataset directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--port", o.port, "TCP port (0 = any free port)");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--ui", o.ui, "Directory with the built review UI, served at /");

  auto * exp = app.add_subcommand("export", "Write radar scans with final labels (corrected, else predicted)");
  exp->add_option("--dataset", o.dataset, "Labeled dataset directory")->required()->check(CLI::ExistingDirectory);
  exp->add_option("--seq", o.seqs, "Sequence id (repeatable; default: all)");
  exp->add_option("--out", o.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError & e) {
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (run_cmd->parsed()) return cmd_run(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out);
    if (serve->parsed()) return cmd_serve(o, out);
    if (exp->parsed()) return cmd_export(o, out);
  } catch (const UsageError & e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError & e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ralf::cli

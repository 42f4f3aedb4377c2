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
#include "ralf/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace ralf
{
namespace
{

struct Labeled
{
  std::map<std::string, SequenceResult> results;
  std::map<std::string, FrameTruth> truth;
  std::map<std::string, std::vector<Timestamp>> stamps;
  std::size_t detections{0};
};

Labeled label_scene(const synth::SceneSpec & spec, const RunConfig & cfg, const fs::path & root)
{
  synth::generate_dataset(spec, root);
  const DatasetManifest m = open_dataset(root);
  Labeled out;
  for (const auto & seq : m.sequences) {
    const auto frames = load_sequence(m, seq);
    for (const auto & f : frames) {
      out.detections += f.radar.detections.size();
      out.stamps[seq].push_back(f.radar.timestamp_ns);
    }
    out.results[seq] = run_sequence(frames, m.calibration, cfg);
    out.truth[seq] = synth::ground_truth(root, seq);
  }
  return out;
}

ConfusionMatrix pooled(const Labeled & l)
{
  ConfusionMatrix cm;
  for (const auto & [seq, r] : l.results) {
    cm += confusion_against(r.records, l.truth.at(seq));
  }
  return cm;
}

synth::SceneSpec clutter_only_scene()
{
  nlohmann::json j = {
    {"seed", 31},
    {"clutter_rate", 40.0},
    {"lidar", {{"channels", 16}, {"azimuth_step_deg", 2.0}}},
    {"objects", {{{"type", "wall"}, {"from", {500.0, -5.0}}, {"to", {500.0, 5.0}}}}},
    {"sequences", {{{"id", "c"}, {"frame_count", 10}, {"trajectory", {{{"t_s", 0.0}, {"speed_mps", 2.0}}}}}}},
  };
  return synth::scene_from_json(j);
}

TEST(Pipeline, OneWallIsFullyRecalled)
{
  for (const std::uint64_t seed : {11U, 12U, 13U}) {
    test::TempDir dir;
    const Labeled l = label_scene(test::one_wall_scene(12, 0.0, seed), RunConfig{}, dir.path());
    const ConfusionMatrix cm = pooled(l);
    EXPECT_GT(cm.tp, 0U);
    EXPECT_EQ(cm.fn, 0U) << "seed " << seed;
    EXPECT_DOUBLE_EQ(*compute_metrics(cm).recall, 1.0);
  }
}

TEST(Pipeline, ClutterOnlySceneIsLabeledArtifactByOpticalBranch)
{
  test::TempDir dir;
  RunConfig cfg;
  cfg.fusion.alpha = 1.0;
  const Labeled l = label_scene(clutter_only_scene(), cfg, dir.path());
  const ConfusionMatrix cm = pooled(l);
  EXPECT_EQ(cm.tp + cm.fn, 0U);
  const double artifact_rate = static_cast<double>(cm.tn) / static_cast<double>(cm.total());
  EXPECT_GE(artifact_rate, 0.95) << cm.tn << "/" << cm.total();
}

TEST(Pipeline, EveryDetectionHasExactlyOneRecord)
{
  test::TempDir dir;
  const Labeled l = label_scene(synth::scene_from_json(test::mixed_scene_json(6)), RunConfig{}, dir.path());
  std::size_t records = 0;
  for (const auto & [seq, r] : l.results) {
    ASSERT_EQ(r.gamma.size(), r.records.size());
    std::map<Timestamp, std::size_t> next;
    for (const auto & rec : r.records) {
      EXPECT_EQ(rec.detection_index, next[rec.frame_ts_ns]++);
      EXPECT_TRUE(rec.y_hat == 0 || rec.y_hat == 1);
      EXPECT_FALSE(rec.y_corrected.has_value());
      if (rec.no_evidence) {
        EXPECT_EQ(rec.y_hat, 0);
      }
      for (const Score & s : {rec.w_lm, rec.w_cm, rec.w_opt, rec.w_tr}) {
        if (s) {
          EXPECT_GE(*s, 0.0);
          EXPECT_LE(*s, 1.0);
        }
      }
    }
    for (const auto & [ts, y] : l.truth.at(seq)) {
      EXPECT_EQ(next[ts], y.size());
    }
    records += r.records.size();
  }
  EXPECT_EQ(records, l.detections);
}

TEST(Pipeline, GroundFilteredDetectionsCarryZeroOpticalScores)
{
  test::TempDir dir;
  nlohmann::json j = test::mixed_scene_json(6);
  j["ground_return_rate"] = 6.0;
  const Labeled l = label_scene(synth::scene_from_json(j), RunConfig{}, dir.path());
  std::size_t filtered = 0;
  for (const auto & [seq, r] : l.results) {
    for (const auto & rec : r.records) {
      if (rec.ground_filtered) {
        ++filtered;
        EXPECT_EQ(rec.w_lm, 0.0);
        EXPECT_EQ(rec.w_cm, 0.0);
      }
    }
  }
  EXPECT_GT(filtered, 0U);
}

TEST(Pipeline, IndependentOfThreadCount)
{
  test::TempDir a, b;
  RunConfig one;
  one.threads = 1;
  RunConfig many;
  many.threads = 4;
  const auto spec = synth::scene_from_json(test::mixed_scene_json(5));
  const Labeled la = label_scene(spec, one, a.path());
  const Labeled lb = label_scene(spec, many, b.path());
  for (const auto & [seq, r] : la.results) {
    EXPECT_EQ(labels_csv(r.records), labels_csv(lb.results.at(seq).records)) << seq;
  }
}

TEST(Pipeline, AlphaExtremesSelectOneBranch)
{
  test::TempDir dir;
  const Labeled l = label_scene(synth::scene_from_json(test::mixed_scene_json(5)), RunConfig{}, dir.path());
  std::size_t both = 0;
  for (const auto & [seq, base] : l.results) {
    for (const double alpha : {0.0, 1.0}) {
      SequenceResult r = base;
      refuse(r, FusionConfig{alpha, 0.3});
      for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto & rec = r.records[i];
        if (!rec.w_opt || !rec.w_tr) {
          continue;
        }
        ++both;
        EXPECT_EQ(rec.w_fused, (alpha == 1.0 ? *rec.w_opt : *rec.w_tr) / r.gamma[i]);
      }
    }
  }
  EXPECT_GT(both, 100U);
}

TEST(Sweep, GridCardinalityAndRecallMonotoneInThreshold)
{
  test::TempDir dir;
  const Labeled l = label_scene(synth::scene_from_json(test::mixed_scene_json(6)), RunConfig{}, dir.path());
  const SweepGrid grid = parse_sweep_grid("alpha=0,0.5,1,w0=0,0.2,0.4,0.6");
  const auto points = sweep(l.results, l.truth, grid);
  ASSERT_EQ(points.size(), 12U);
  for (std::size_t a = 0; a < 3; ++a) {
    double previous = 2.0;
    for (std::size_t w = 0; w < 4; ++w) {
      const SweepPoint & p = points[a * 4 + w];
      EXPECT_EQ(p.alpha, grid.alpha[a]);
      EXPECT_EQ(p.w0, grid.w0[w]);
      const double recall = *p.report.pooled.recall;
      EXPECT_LE(recall, previous);
      previous = recall;
      if (p.w0 == 0.0) {
        EXPECT_DOUBLE_EQ(recall, 1.0);
      }
    }
  }
  const std::string csv = sweep_csv(points);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 13U);
}

TEST(Sweep, IgnoresReviewerCorrections)
{
  test::TempDir dir;
  Labeled l = label_scene(test::one_wall_scene(6), RunConfig{}, dir.path());
  const SweepGrid grid{{0.5}, {0.3}};
  const auto before = sweep(l.results, l.truth, grid);
  for (auto & [seq, r] : l.results) {
    for (auto & rec : r.records) {
      rec.y_corrected = 0;
    }
  }
  const auto after = sweep(l.results, l.truth, grid);
  EXPECT_EQ(before[0].report.pooled_confusion, after[0].report.pooled_confusion);
}

TEST(SweepGrid, ParsesAndRejects)
{
  const SweepGrid g = parse_sweep_grid("w0=0.1,0.2,alpha=1");
  EXPECT_EQ(g.w0, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(g.alpha, (std::vector<double>{1.0}));
  EXPECT_THROW(parse_sweep_grid("alpha=0.5"), std::invalid_argument);
  EXPECT_THROW(parse_sweep_grid("alpha=0.5,w0=x"), std::invalid_argument);
  EXPECT_THROW(parse_sweep_grid("beta=0.5,w0=0.1"), std::invalid_argument);
  EXPECT_THROW(parse_sweep_grid("alpha=1.5,w0=0.1"), std::invalid_argument);
  EXPECT_THROW(parse_sweep_grid("0.5,w0=0.1"), std::invalid_argument);
}

std::vector<PlausibilityRecord> two_frames()
{
  std::vector<PlausibilityRecord> r(4);
  for (std::size_t i = 0; i < 4; ++i) {
    r[i].frame_ts_ns = i < 2 ? 100 : 200;
    r[i].detection_index = i % 2;
    r[i].y_hat = static_cast<int>(i % 2);
  }
  return r;
}

TEST(Corrections, EmptyListChangesNothing)
{
  auto r = two_frames();
  apply_corrections(r, {});
  for (const auto & rec : r) {
    EXPECT_FALSE(rec.y_corrected.has_value());
  }
}

TEST(Corrections, FlipAndLastWriteWins)
{
  auto r = two_frames();
  const std::vector<Correction> c{{100, 0, 1}, {200, 1, 1}, {200, 1, 0}};
  apply_corrections(r, c);
  EXPECT_EQ(r[0].effective_label(), 1);
  EXPECT_EQ(r[0].y_hat, 0);
  EXPECT_EQ(r[3].y_corrected, 0);
  EXPECT_FALSE(r[1].y_corrected.has_value());
}

TEST(Corrections, InvalidBatchIsRejectedAtomically)
{
  auto r = two_frames();
  const std::vector<Correction> c{{100, 0, 1}, {100, 7, 1}, {200, 0, 2}};
  try {
    apply_corrections(r, c);
    FAIL() << "expected CorrectionRejected";
  } catch (const CorrectionRejected & e) {
    ASSERT_EQ(e.issues().size(), 2U);
    EXPECT_EQ(e.issues()[0].item, 1U);
    EXPECT_EQ(e.issues()[1].item, 2U);
  }
  for (const auto & rec : r) {
    EXPECT_FALSE(rec.y_corrected.has_value());
  }
}

TEST(Outputs, LabelsAndFlagsRoundTrip)
{
  test::TempDir dir;
  SequenceResult result;
  result.records = two_frames();
  result.records[1].w_lm = 0.5;
  result.records[1].w_opt = 0.5;
  result.records[1].y_corrected = 0;
  result.gamma.assign(4, 1.0);
  result.consistency = {{100, "front", 0.02, false}, {200, "rear", 0.8, true}};
  const std::vector<Timestamp> stamps{100, 200, 300};
  write_sequence_outputs(dir.path(), "s", result, stamps);
  const auto labels = read_sequence_labels(layout::labels_dir(dir.path(), "s"));
  ASSERT_EQ(labels.size(), 3U);
  EXPECT_TRUE(labels.at(300).empty());
  EXPECT_EQ(labels.at(100)[1].w_lm, 0.5);
  EXPECT_EQ(labels.at(100)[1].y_corrected, 0);
  const auto flags = read_review_flags(dir.path() / "s" / "review_flags.csv");
  ASSERT_EQ(flags.size(), 2U);
  EXPECT_EQ(flags[1].camera_id, "rear");
  EXPECT_TRUE(flags[1].flagged);
  EXPECT_DOUBLE_EQ(flags[0].inconsistency, 0.02);
}

TEST(RunConfig, JsonRoundTripAndValidation)
{
  RunConfig cfg;
  cfg.fusion = {0.7, 0.25};
  cfg.tracking.n_b = 3;
  cfg.blindspot = BlindspotCone{1.0, 1.9, 0.4};
  cfg.profile = AzimuthReliabilityProfile::symmetric(1.0, 2.0);
  const nlohmann::json j = run_config_to_json(cfg);
  const RunConfig back = run_config_from_json(j);
  EXPECT_EQ(run_config_to_json(back), j);
  EXPECT_EQ(back.fusion.alpha, 0.7);
  EXPECT_EQ(back.profile.gamma_at(0.5), 1.5);
  ASSERT_TRUE(back.blindspot.has_value());

  nlohmann::json bad = j;
  bad["fusion"]["gain"] = 1.0;
  EXPECT_THROW(run_config_from_json(bad), DataError);
  bad = j;
  bad["fusion"]["w0"] = 2.0;
  EXPECT_ANY_THROW(run_config_from_json(bad).validate());
  EXPECT_NO_THROW(RunConfig{}.validate());
}

TEST(Hashing, Sha256KnownVectors)
{
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, ManifestTracksConfigAndData)
{
  test::TempDir dir;
  synth::generate_dataset(test::one_wall_scene(3), dir.path());
  const DatasetManifest m = open_dataset(dir.path());
  const std::vector<std::string> seqs{"seq_00"};
  const nlohmann::json a = run_manifest(m, seqs, RunConfig{});
  RunConfig other;
  other.fusion.w0 = 0.5;
  const nlohmann::json b = run_manifest(m, seqs, other);
  EXPECT_EQ(a["dataset_sha256"], b["dataset_sha256"]);
  EXPECT_NE(a["config_sha256"], b["config_sha256"]);
  EXPECT_EQ(a["dataset_sha256"]["seq_00"].get<std::string>().size(), 64U);
}

}  // namespace
}  // namespace ralf

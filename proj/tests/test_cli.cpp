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
#include "ralf/metrics.hpp"
#include "ralf/pipeline.hpp"
#include "ralf/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace ralf
{
namespace
{

namespace fs = std::filesystem;

struct Invocation
{
  int code;
  std::string out;
  std::string err;
};

Invocation ralf_cli(const std::vector<std::string> & args)
{
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes the mixed scene to disk and generates it through the CLI.
class CliDataset : public ::testing::Test
{
protected:
  void SetUp() override
  {
    spec_ = dir_.path() / "scene.json";
    std::ofstream(spec_) << test::mixed_scene_json(6).dump(2);
    data_ = dir_.path() / "data";
    const auto r = ralf_cli({"synth", "--spec", spec_.string(), "--out", data_.string()});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }

  test::TempDir dir_;
  fs::path spec_;
  fs::path data_;
};

TEST(Cli, HelpExitsZero)
{
  const auto r = ralf_cli({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  for (const char * sub : {"synth", "run", "eval", "sweep", "serve", "export"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  const auto sub = ralf_cli({"run", "--help"});
  EXPECT_EQ(sub.code, cli::kExitOk);
  EXPECT_NE(sub.out.find("--alpha"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne)
{
  EXPECT_EQ(ralf_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(ralf_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(ralf_cli({"run", "--dataset", "/nonexistent/ralf"}).code, cli::kExitUsage);
  EXPECT_EQ(ralf_cli({"eval", "--format", "xml", "--dataset", "."}).code, cli::kExitUsage);
}

TEST(Cli, MissingManifestExitsTwo)
{
  test::TempDir empty;
  const auto r = ralf_cli({"run", "--dataset", empty.path().string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliDataset, InvalidOverrideIsAUsageError)
{
  EXPECT_EQ(ralf_cli({"run", "--dataset", data_.string(), "--alpha", "1.5"}).code, cli::kExitUsage);
  EXPECT_EQ(ralf_cli({"sweep", "--dataset", data_.string(), "--grid", "alpha=0.5"}).code, cli::kExitUsage);
}

TEST_F(CliDataset, UnknownSequenceExitsTwo)
{
  EXPECT_EQ(ralf_cli({"run", "--dataset", data_.string(), "--seq", "zz"}).code, cli::kExitData);
}

TEST_F(CliDataset, RunThenEvalMatchesLibraryMetrics)
{
  const auto run = ralf_cli({"run", "--dataset", data_.string(), "--threads", "2"});
  ASSERT_EQ(run.code, cli::kExitOk) << run.err;
  EXPECT_TRUE(fs::exists(data_ / "run_manifest.json"));

  const auto eval = ralf_cli({"eval", "--dataset", data_.string()});
  ASSERT_EQ(eval.code, cli::kExitOk) << eval.err;

  const DatasetManifest m = open_dataset(data_);
  std::map<std::string, ConfusionMatrix> expected;
  for (const auto & seq : m.sequences) {
    const auto result = run_sequence(load_sequence(m, seq), m.calibration, RunConfig{});
    expected[seq] = confusion_against(result.records, synth::ground_truth(data_, seq));
  }
  EXPECT_EQ(eval.out, report_csv(build_report(expected)));

  const fs::path json_out = dir_.path() / "report.json";
  ASSERT_EQ(ralf_cli({"eval", "--dataset", data_.string(), "--format", "json", "--out", json_out.string()}).code,
            cli::kExitOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(json_out)), report_json(build_report(expected)));
}

TEST_F(CliDataset, EvalOfOneLabelsDirectory)
{
  ASSERT_EQ(ralf_cli({"run", "--dataset", data_.string()}).code, cli::kExitOk);
  const auto r = ralf_cli({"eval", "--dataset", data_.string(), "--labels", (data_ / "a" / "labels").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("id,", 0), 0U);
  EXPECT_NE(r.out.find("\na,"), std::string::npos);
  EXPECT_EQ(r.out.find("\nb,"), std::string::npos);
}

TEST_F(CliDataset, RunIsByteIdenticalAcrossThreadCounts)
{
  const fs::path one = dir_.path() / "one";
  const fs::path four = dir_.path() / "four";
  ASSERT_EQ(ralf_cli({"run", "--dataset", data_.string(), "--out", one.string(), "--threads", "1"}).code, 0);
  ASSERT_EQ(ralf_cli({"run", "--dataset", data_.string(), "--out", four.string(), "--threads", "4"}).code, 0);
  std::size_t compared = 0;
  for (const auto & e : fs::recursive_directory_iterator(one)) {
    if (e.is_regular_file() && e.path().filename() != "run_manifest.json") {
      EXPECT_EQ(slurp(e.path()), slurp(four / fs::relative(e.path(), one))) << e.path();
      ++compared;
    }
  }
  EXPECT_GT(compared, 6U);
}

TEST_F(CliDataset, ExportWritesFinalLabels)
{
  ASSERT_EQ(ralf_cli({"run", "--dataset", data_.string()}).code, cli::kExitOk);
  const fs::path out = dir_.path() / "export";
  const auto r = ralf_cli({"export", "--dataset", data_.string(), "--seq", "a", "--out", out.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(out / "calibration.json"));
  EXPECT_FALSE(fs::exists(out / "b"));

  const auto labels = read_sequence_labels(data_ / "a" / "labels");
  ASSERT_FALSE(labels.empty());
  for (const auto & [ts, records] : labels) {
    std::istringstream csv(slurp(layout::frame_file(out / "a", ts, ".csv")));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "y");
    std::size_t i = 0;
    while (std::getline(csv, line)) {
      ASSERT_LT(i, records.size());
      EXPECT_EQ(line.substr(line.rfind(',') + 1), std::to_string(records[i].effective_label()));
      ++i;
    }
    EXPECT_EQ(i, records.size());
  }
}

TEST_F(CliDataset, SweepWritesOneRowPerGridPoint)
{
  const auto r =
    ralf_cli({"sweep", "--dataset", data_.string(), "--grid", "alpha=0,1,w0=0.2,0.4,0.6"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
}

TEST_F(CliDataset, SeedOverrideChangesTheData)
{
  const fs::path other = dir_.path() / "other";
  ASSERT_EQ(ralf_cli({"synth", "--spec", spec_.string(), "--out", other.string(), "--seed", "99"}).code, 0);
  const auto stamps = list_timestamps(data_ / "a" / "radar", ".csv");
  ASSERT_FALSE(stamps.empty());
  EXPECT_NE(slurp(layout::frame_file(data_ / "a" / "radar", stamps[0], ".csv")),
            slurp(layout::frame_file(other / "a" / "radar", stamps[0], ".csv")));
}

}  // namespace
}  // namespace ralf

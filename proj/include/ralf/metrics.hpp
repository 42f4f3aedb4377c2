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

#ifndef RALF__METRICS_HPP_
#define RALF__METRICS_HPP_

#include "ralf/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ralf
{

/// Binary confusion counts; class 1 is "plausible", class 0 is "artifact".
struct ConfusionMatrix
{
  std::uint64_t tp{0};
  std::uint64_t fp{0};
  std::uint64_t tn{0};
  std::uint64_t fn{0};

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix & operator+=(const ConfusionMatrix & o);
  friend bool operator==(const ConfusionMatrix &, const ConfusionMatrix &) = default;
};

/// Throws std::invalid_argument on length mismatch or a non-binary label.
ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth);

/// Metric values; std::nullopt marks a zero denominator.
struct MetricValues
{
  std::uint64_t n{0};
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> iou_plausible;
  std::optional<double> iou_artifact;
  std::optional<double> mean_iou;
};

MetricValues compute_metrics(const ConfusionMatrix & cm);

/// Per-sequence metrics plus their unweighted mean over sequences and the pooled values.
struct MetricReport
{
  std::map<std::string, MetricValues> per_sequence;
  std::map<std::string, ConfusionMatrix> confusion_per_sequence;
  MetricValues mean;
  MetricValues pooled;
  ConfusionMatrix pooled_confusion;
};

MetricReport build_report(const std::map<std::string, ConfusionMatrix> & per_sequence);

/// CSV with columns id,n,acc,precision,recall,f1_plausible,miou,iou_plausible,iou_artifact.
std::string report_csv(const MetricReport & report);
nlohmann::json report_json(const MetricReport & report);

struct ClassBalance
{
  double fraction_plausible{0.0};
  double fraction_artifact{0.0};
};

ClassBalance class_balance(std::span<const int> truth);

enum class ClusterLabel { kVehicle, kHuman, kConstruction, kVegetation, kPoles, kArtifacts };

std::string_view to_string(ClusterLabel c);
std::optional<ClusterLabel> cluster_from_string(std::string_view name);

/// Cluster of a SemanticKITTI class name (e.g. "traffic-sign"); std::nullopt if unknown.
std::optional<ClusterLabel> cluster_of_semantic_kitti(std::string_view class_name);

/// Naive comparison filter: plausible iff at least `min_neighbors` other points lie within
/// `radius_m`.
std::vector<int> baseline_radius_outlier(
  std::span<const CartesianPoint> points, double radius_m, std::size_t min_neighbors);

}  // namespace ralf

#endif  // RALF__METRICS_HPP_

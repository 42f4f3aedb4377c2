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

#include "ralf/metrics.hpp"

#include "ralf/geometry.hpp"
#include "ralf/ingest.hpp"

#include <array>
#include <stdexcept>

namespace ralf
{

ConfusionMatrix & ConfusionMatrix::operator+=(const ConfusionMatrix & o)
{
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth)
{
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("confusion: predicted and truth differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
      throw std::invalid_argument("confusion: labels must be 0 or 1");
    }
    if (p == 1) {
      (t == 1 ? cm.tp : cm.fp) += 1;
    } else {
      (t == 1 ? cm.fn : cm.tn) += 1;
    }
  }
  return cm;
}

namespace
{

std::optional<double> ratio(std::uint64_t num, std::uint64_t den)
{
  if (den == 0) {
    return std::nullopt;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> mean_of(std::span<const std::optional<double>> values)
{
  double sum = 0.0;
  for (const auto & v : values) {
    if (!v) {
      return std::nullopt;
    }
    sum += *v;
  }
  if (values.empty()) {
    return std::nullopt;
  }
  return sum / static_cast<double>(values.size());
}

}  // namespace

MetricValues compute_metrics(const ConfusionMatrix & cm)
{
  MetricValues m;
  m.n = cm.total();
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  m.iou_plausible = ratio(cm.tp, cm.tp + cm.fp + cm.fn);
  m.iou_artifact = ratio(cm.tn, cm.tn + cm.fn + cm.fp);
  const std::array<std::optional<double>, 2> ious{m.iou_plausible, m.iou_artifact};
  m.mean_iou = mean_of(ious);
  return m;
}

MetricReport build_report(const std::map<std::string, ConfusionMatrix> & per_sequence)
{
  MetricReport report;
  report.confusion_per_sequence = per_sequence;
  std::vector<MetricValues> values;
  for (const auto & [id, cm] : per_sequence) {
    report.per_sequence[id] = compute_metrics(cm);
    values.push_back(report.per_sequence[id]);
    report.pooled_confusion += cm;
  }
  report.pooled = compute_metrics(report.pooled_confusion);

  // Unweighted mean over sequences; n is the total count.
  auto column = [&](auto member) {
    std::vector<std::optional<double>> col;
    for (const auto & v : values) {
      col.push_back(v.*member);
    }
    return mean_of(col);
  };
  report.mean.n = report.pooled_confusion.total();
  report.mean.accuracy = column(&MetricValues::accuracy);
  report.mean.precision = column(&MetricValues::precision);
  report.mean.recall = column(&MetricValues::recall);
  report.mean.f1 = column(&MetricValues::f1);
  report.mean.iou_plausible = column(&MetricValues::iou_plausible);
  report.mean.iou_artifact = column(&MetricValues::iou_artifact);
  report.mean.mean_iou = column(&MetricValues::mean_iou);
  return report;
}

namespace
{

std::string cell(const std::optional<double> & v) { return v ? format_double(*v) : std::string(); }

std::string csv_row(const std::string & id, const MetricValues & m)
{
  return id + ',' + std::to_string(m.n) + ',' + cell(m.accuracy) + ',' + cell(m.precision) + ',' +
         cell(m.recall) + ',' + cell(m.f1) + ',' + cell(m.mean_iou) + ',' + cell(m.iou_plausible) +
         ',' + cell(m.iou_artifact) + '\n';
}

nlohmann::json metric_json(const MetricValues & m)
{
  auto value = [](const std::optional<double> & v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {
    {"n", m.n},
    {"accuracy", value(m.accuracy)},
    {"precision", value(m.precision)},
    {"recall", value(m.recall)},
    {"f1_plausible", value(m.f1)},
    {"iou_plausible", value(m.iou_plausible)},
    {"iou_artifact", value(m.iou_artifact)},
    {"mean_iou", value(m.mean_iou)},
  };
}

}  // namespace

std::string report_csv(const MetricReport & report)
{
  std::string out = "id,n,acc,precision,recall,f1_plausible,miou,iou_plausible,iou_artifact\n";
  for (const auto & [id, m] : report.per_sequence) {
    out += csv_row(id, m);
  }
  out += csv_row("mean", report.mean);
  out += csv_row("pooled", report.pooled);
  return out;
}

nlohmann::json report_json(const MetricReport & report)
{
  nlohmann::json seqs = nlohmann::json::object();
  for (const auto & [id, m] : report.per_sequence) {
    const auto & cm = report.confusion_per_sequence.at(id);
    seqs[id] = metric_json(m);
    seqs[id]["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
  }
  const auto & cm = report.pooled_confusion;
  nlohmann::json pooled = metric_json(report.pooled);
  pooled["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
  return {{"per_sequence", seqs}, {"mean", metric_json(report.mean)}, {"pooled", pooled}};
}

ClassBalance class_balance(std::span<const int> truth)
{
  if (truth.empty()) {
    throw std::invalid_argument("class balance of an empty label set");
  }
  std::size_t ones = 0;
  for (const int y : truth) {
    ones += y == 1 ? 1 : 0;
  }
  const double plausible = static_cast<double>(ones) / static_cast<double>(truth.size());
  return {plausible, 1.0 - plausible};
}

std::string_view to_string(ClusterLabel c)
{
  switch (c) {
    case ClusterLabel::kVehicle:
      return "vehicle";
    case ClusterLabel::kHuman:
      return "human";
    case ClusterLabel::kConstruction:
      return "construction";
    case ClusterLabel::kVegetation:
      return "vegetation";
    case ClusterLabel::kPoles:
      return "poles";
    case ClusterLabel::kArtifacts:
      return "artifacts";
  }
  return "artifacts";
}

std::optional<ClusterLabel> cluster_from_string(std::string_view name)
{
  for (const auto c : {ClusterLabel::kVehicle, ClusterLabel::kHuman, ClusterLabel::kConstruction,
                       ClusterLabel::kVegetation, ClusterLabel::kPoles, ClusterLabel::kArtifacts}) {
    if (to_string(c) == name) {
      return c;
    }
  }
  return std::nullopt;
}

std::optional<ClusterLabel> cluster_of_semantic_kitti(std::string_view class_name)
{
  struct Entry
  {
    std::string_view name;
    ClusterLabel cluster;
  };
  static constexpr std::array<Entry, 26> kTable{{
    {"car", ClusterLabel::kVehicle},
    {"bicycle", ClusterLabel::kVehicle},
    {"motorcycle", ClusterLabel::kVehicle},
    {"truck", ClusterLabel::kVehicle},
    {"other-vehicle", ClusterLabel::kVehicle},
    {"bus", ClusterLabel::kVehicle},
    {"person", ClusterLabel::kHuman},
    {"bicyclist", ClusterLabel::kHuman},
    {"motorcyclist", ClusterLabel::kHuman},
    {"building", ClusterLabel::kConstruction},
    {"fence", ClusterLabel::kConstruction},
    {"vegetation", ClusterLabel::kVegetation},
    {"trunk", ClusterLabel::kVegetation},
    {"terrain", ClusterLabel::kVegetation},
    {"pole", ClusterLabel::kPoles},
    {"traffic-sign", ClusterLabel::kPoles},
    {"traffic_sign", ClusterLabel::kPoles},
    {"traffic-light", ClusterLabel::kPoles},
    {"traffic_light", ClusterLabel::kPoles},
    {"sky", ClusterLabel::kArtifacts},
    {"road", ClusterLabel::kArtifacts},
    {"parking", ClusterLabel::kArtifacts},
    {"sidewalk", ClusterLabel::kArtifacts},
    {"other-ground", ClusterLabel::kArtifacts},
    {"other_ground", ClusterLabel::kArtifacts},
    {"other_vehicle", ClusterLabel::kVehicle},
  }};
  for (const auto & e : kTable) {
    if (e.name == class_name) {
      return e.cluster;
    }
  }
  return std::nullopt;
}

std::vector<int> baseline_radius_outlier(
  std::span<const CartesianPoint> points, double radius_m, std::size_t min_neighbors)
{
  if (!(radius_m > 0.0)) {
    throw std::invalid_argument("radius outlier filter needs a positive radius");
  }
  const KnnIndex index(std::vector<CartesianPoint>(points.begin(), points.end()));
  std::vector<int> out(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto found = index.within_radius(points[i], radius_m);
    const std::size_t others = found.empty() ? 0 : found.size() - 1;  // excludes the point itself
    out[i] = others >= min_neighbors ? 1 : 0;
  }
  return out;
}

}  // namespace ralf

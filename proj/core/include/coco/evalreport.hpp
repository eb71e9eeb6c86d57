#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace coco {

// Binary classification metrics; the positive class is "inconsistent" (1).
// Precision is absent when nothing was predicted positive, recall when there
// are no positive labels, F1 when both tp+fp and tp+fn are zero.
struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double accuracy = 0.0;

  std::size_t total() const { return tp + fp + fn + tn; }
  nlohmann::json to_json() const;
};

Metrics compute(std::span<const int> predictions, std::span<const int> labels);

// Builds a Metrics from confusion counts.
Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

struct Spread {
  std::optional<double> mean;
  std::optional<double> stddev;  // sample standard deviation, 0 for one run
  std::size_t runs = 0;          // runs where the metric was present
};

struct AggregateMetrics {
  Spread precision;
  Spread recall;
  Spread f1;
  Spread accuracy;
  std::size_t runs = 0;

  nlohmann::json to_json() const;
};

// Per-metric arithmetic mean over the runs where the metric is present.
AggregateMetrics aggregate(std::span<const Metrics> runs);

// Percent with one decimal, rounded half away from zero; absent -> "—".
std::string format_percent(std::optional<double> value);

// Results table: Model | Precision | Recall | F1 | Accuracy, one row per
// model in insertion order.
struct ReportRow {
  std::string model;
  AggregateMetrics metrics;
};

std::string report_table(std::span<const ReportRow> rows);
nlohmann::json report_json(std::span<const ReportRow> rows);

}  // namespace coco

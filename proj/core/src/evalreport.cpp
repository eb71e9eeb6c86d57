#include "coco/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "coco/error.hpp"

namespace coco {
namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// Display width in code points, so the "—" placeholder aligns.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string pad_left(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

}  // namespace

Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  if (tp + fp > 0) m.precision = d(tp) / d(tp + fp);
  if (tp + fn > 0) m.recall = d(tp) / d(tp + fn);
  if (2 * tp + fp + fn > 0) m.f1 = 2.0 * d(tp) / d(2 * tp + fp + fn);
  const std::size_t total = tp + fp + fn + tn;
  m.accuracy = total > 0 ? d(tp + tn) / d(total) : 0.0;
  return m;
}

Metrics compute(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw Error("predictions and labels differ in length (" +
                std::to_string(predictions.size()) + " vs " + std::to_string(labels.size()) +
                ")");
  if (predictions.empty()) throw Error("cannot compute metrics on an empty set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const bool pred = predictions[k] != 0;
    const bool gold = labels[k] != 0;
    if (pred && gold) ++tp;
    else if (pred) ++fp;
    else if (gold) ++fn;
    else ++tn;
  }
  return from_counts(tp, fp, fn, tn);
}

nlohmann::json Metrics::to_json() const {
  return {{"tp", tp},         {"fp", fp},           {"fn", fn},
          {"tn", tn},         {"precision", opt(precision)},
          {"recall", opt(recall)}, {"f1", opt(f1)}, {"accuracy", accuracy}};
}

AggregateMetrics aggregate(std::span<const Metrics> runs) {
  if (runs.empty()) throw Error("aggregate needs at least one run");
  auto spread = [&](auto getter) {
    std::vector<double> values;
    for (const auto& r : runs)
      if (auto v = getter(r)) values.push_back(*v);
    Spread s;
    s.runs = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.mean = mean;
    s.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return s;
  };
  AggregateMetrics out;
  out.runs = runs.size();
  out.precision = spread([](const Metrics& m) { return m.precision; });
  out.recall = spread([](const Metrics& m) { return m.recall; });
  out.f1 = spread([](const Metrics& m) { return m.f1; });
  out.accuracy = spread([](const Metrics& m) { return std::optional<double>(m.accuracy); });
  return out;
}

nlohmann::json AggregateMetrics::to_json() const {
  auto one = [](const Spread& s) {
    return nlohmann::json{{"mean", opt(s.mean)}, {"stddev", opt(s.stddev)}, {"runs", s.runs}};
  };
  return {{"precision", one(precision)},
          {"recall", one(recall)},
          {"f1", one(f1)},
          {"accuracy", one(accuracy)},
          {"runs", runs}};
}

std::string format_percent(std::optional<double> value) {
  if (!value) return "—";
  // std::round is half away from zero.
  const double tenths = std::round(*value * 1000.0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", tenths / 10.0);
  return buf;
}

std::string report_table(std::span<const ReportRow> rows) {
  if (rows.empty()) throw Error("report needs at least one model");
  const std::vector<std::string> header = {"Model", "Precision", "Recall", "F1", "Accuracy"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.model, format_percent(r.metrics.precision.mean),
                     format_percent(r.metrics.recall.mean), format_percent(r.metrics.f1.mean),
                     format_percent(r.metrics.accuracy.mean)});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = display_width(header[c]);
    for (const auto& row : cells) width[c] = std::max(width[c], display_width(row[c]));
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    out << pad_right(row[0], width[0]);
    for (std::size_t c = 1; c < row.size(); ++c) out << "  " << pad_left(row[c], width[c]);
    out << '\n';
  };
  std::size_t line_width = width[0];
  for (std::size_t c = 1; c < width.size(); ++c) line_width += 2 + width[c];
  emit(header);
  out << std::string(line_width, '-') << '\n';
  for (const auto& row : cells) emit(row);
  return out.str();
}

nlohmann::json report_json(std::span<const ReportRow> rows) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : rows) {
    auto pct = [](const Spread& s) {
      return s.mean ? nlohmann::json(format_percent(s.mean)) : nlohmann::json(nullptr);
    };
    models.push_back({{"model", r.model},
                      {"precision", pct(r.metrics.precision)},
                      {"recall", pct(r.metrics.recall)},
                      {"f1", pct(r.metrics.f1)},
                      {"accuracy", pct(r.metrics.accuracy)},
                      {"raw", r.metrics.to_json()}});
  }
  return {{"columns", {"Precision", "Recall", "F1", "Accuracy"}}, {"models", models}};
}

}  // namespace coco

#pragma once

// Artifact writers: CSV tables, JSON documents and self-contained SVG
// line charts.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace starlab::cli {

// Doubles are printed with 17 significant digits so reruns are byte-identical
// and values round-trip.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(const std::vector<double>& row);
  void write(const std::filesystem::path& path) const;
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // non-positive values are dropped on a log axis
};

// Polyline chart with axes, ticks and a legend.
std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace starlab::cli

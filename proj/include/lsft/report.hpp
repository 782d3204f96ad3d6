#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsft/harness.hpp"
#include "lsft/trace.hpp"

namespace lsft {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything needed to re-run the command that produced a report.
struct RunManifest {
  std::string kind;
  std::string method;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::string tool_version = kToolVersion;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// A CSV report: a `# manifest {json}` comment line, a header row, then
/// data rows. Numbers are written with 17 significant digits.
struct CsvReport {
  RunManifest manifest;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Column orders:
//   convergence: iteration, mean_loss, std_loss          (iteration counts from 1)
//   traces:      seed, layer, method, iteration, total, content_part, style_part,
//                lambda, eta, wall_seconds, error
//   balance:     alpha, content_loss, style_loss
//   timing:      shape, method, median_seconds
//   histogram:   bin_lo, bin_hi, count
CsvReport convergence_report(const AggregateCurve& curve, RunManifest manifest);
CsvReport traces_report(const std::vector<ConvergenceTrace>& traces, RunManifest manifest);
CsvReport balance_report(const std::vector<BalancePoint>& points, RunManifest manifest);
CsvReport timing_report(const std::vector<TimingRow>& rows, RunManifest manifest);
CsvReport histogram_report(const Histogram& histogram, RunManifest manifest);

/// Throws std::runtime_error naming the path on I/O failure and ShapeError on
/// an empty report.
void write_report_csv(const CsvReport& report, const std::filesystem::path& path);

/// Reads back a report written by write_report_csv.
CsvReport read_report_csv(const std::filesystem::path& path);

std::string format_number(double value);

}  // namespace lsft

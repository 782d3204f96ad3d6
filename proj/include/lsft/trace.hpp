#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lsft {

/// One evaluation of the objective: total = content_part + lambda·style_part.
struct LossBreakdown {
  double total = 0.0;
  double content_part = 0.0;
  double style_part = 0.0;
  double lambda = 0.0;
};

struct IterationRecord {
  LossBreakdown loss;
  /// Step size used; absent when the iteration took no step.
  std::optional<double> eta;
  std::chrono::nanoseconds wall_time{0};
};

/// Loss history of one transformation run on one (content, style) pair.
/// `records` holds one entry per executed iteration, measured after the update;
/// `initial` is the objective at the starting point.
struct ConvergenceTrace {
  std::string method;
  std::string layer;
  std::uint64_t seed = 0;
  LossBreakdown initial;
  std::vector<IterationRecord> records;
  /// Set when the run aborted (e.g. IterFT diverging); records hold what was
  /// completed before the failure.
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
  double final_loss() const { return records.empty() ? initial.total : records.back().loss.total; }
};

}  // namespace lsft

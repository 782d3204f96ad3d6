#include "lsft/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lsft {

namespace {

constexpr const char* kManifestPrefix = "# manifest ";

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string quote_cell(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch == '\n' || ch == '\r' ? ' ' : ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"kind", kind},   {"method", method}, {"config", config},
          {"seeds", seeds}, {"inputs", inputs}, {"tool_version", tool_version}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.kind = j.at("kind").get<std::string>();
  m.method = j.at("method").get<std::string>();
  m.config = j.at("config");
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.inputs = j.at("inputs").get<std::vector<std::string>>();
  m.tool_version = j.at("tool_version").get<std::string>();
  return m;
}

CsvReport convergence_report(const AggregateCurve& curve, RunManifest manifest) {
  manifest.kind = "convergence";
  manifest.config["trials"] = curve.trials;
  CsvReport r{std::move(manifest), {"iteration", "mean_loss", "std_loss"}, {}};
  for (std::size_t k = 0; k < curve.mean.size(); ++k) {
    r.rows.push_back({std::to_string(k + 1), format_number(curve.mean[k]),
                      format_number(curve.std_dev[k])});
  }
  return r;
}

CsvReport traces_report(const std::vector<ConvergenceTrace>& traces, RunManifest manifest) {
  manifest.kind = "traces";
  CsvReport r{std::move(manifest),
              {"seed", "layer", "method", "iteration", "total", "content_part", "style_part",
               "lambda", "eta", "wall_seconds", "error"},
              {}};
  for (const auto& t : traces) {
    auto row = [&](std::size_t iteration, const LossBreakdown& loss, const std::string& eta,
                   const std::string& seconds, const std::string& error) {
      r.rows.push_back({std::to_string(t.seed), t.layer, t.method, std::to_string(iteration),
                        format_number(loss.total), format_number(loss.content_part),
                        format_number(loss.style_part), format_number(loss.lambda), eta, seconds,
                        error});
    };
    row(0, t.initial, "", "", "");
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const IterationRecord& rec = t.records[k];
      row(k + 1, rec.loss, rec.eta ? format_number(*rec.eta) : "",
          format_number(std::chrono::duration<double>(rec.wall_time).count()), "");
    }
    if (t.error) row(t.records.size() + 1, LossBreakdown{}, "", "", *t.error);
  }
  return r;
}

CsvReport balance_report(const std::vector<BalancePoint>& points, RunManifest manifest) {
  manifest.kind = "balance";
  CsvReport r{std::move(manifest), {"alpha", "content_loss", "style_loss"}, {}};
  for (const auto& p : points) {
    r.rows.push_back({format_number(p.alpha), format_number(p.mean_content_loss),
                      format_number(p.mean_style_loss)});
  }
  return r;
}

CsvReport timing_report(const std::vector<TimingRow>& rows, RunManifest manifest) {
  manifest.kind = "timing";
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& row : rows) {
    shapes.push_back({{"shape", row.shape}, {"channels", row.channels}, {"samples", row.samples},
                      {"repeats", row.repeats}});
  }
  manifest.config["shapes"] = shapes;
  CsvReport r{std::move(manifest), {"shape", "method", "median_seconds"}, {}};
  for (const auto& row : rows) {
    r.rows.push_back({row.shape, row.method, format_number(row.median_seconds)});
  }
  return r;
}

CsvReport histogram_report(const Histogram& h, RunManifest manifest) {
  manifest.kind = "histogram";
  CsvReport r{std::move(manifest), {"bin_lo", "bin_hi", "count"}, {}};
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    r.rows.push_back(
        {format_number(h.edges[b]), format_number(h.edges[b + 1]), std::to_string(h.counts[b])});
  }
  return r;
}

void write_report_csv(const CsvReport& report, const std::filesystem::path& path) {
  if (report.rows.empty()) throw ShapeError("write_report_csv: report has no rows");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open report " + path.string() + " for writing");
  os << kManifestPrefix << report.manifest.to_json().dump() << "\n";
  auto write_row = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << quote_cell(cells[i]);
    os << "\n";
  };
  write_row(report.header);
  for (const auto& row : report.rows) write_row(row);
  if (!os) throw std::runtime_error("write failed for report " + path.string());
}

CsvReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open report " + path.string());
  CsvReport r;
  std::string line;
  bool have_manifest = false;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      if (line.starts_with(kManifestPrefix)) {
        r.manifest = RunManifest::from_json(
            nlohmann::json::parse(line.substr(std::string(kManifestPrefix).size())));
        have_manifest = true;
      }
      continue;
    }
    if (!have_header) {
      r.header = split_row(line);
      have_header = true;
    } else {
      r.rows.push_back(split_row(line));
    }
  }
  if (!have_manifest) throw std::runtime_error("report " + path.string() + " has no manifest");
  if (!have_header) throw std::runtime_error("report " + path.string() + " has no header");
  return r;
}

}  // namespace lsft

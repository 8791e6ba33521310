#include "uniclip/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "json.hpp"

namespace uniclip {

using json = nlohmann::ordered_json;

namespace {

json record_json(const MetricsRecord& rec) {
  json j = json::object();
  for (const auto& [name, value] : metric_fields(rec)) j[name] = value;
  return j;
}

}  // namespace

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string artifact_header(const RunConfig& cfg, const std::string& kind) {
  std::ostringstream out;
  out << "# uniclip " << kind << " v" << kArtifactSchemaVersion << "\n";
  out << "# seed: " << cfg.seed << "\n";
  out << "# config: " << config_to_json(cfg, -1) << "\n";
  return out.str();
}

std::string metrics_csv(const RunConfig& cfg, const std::vector<MetricsRecord>& history) {
  std::ostringstream out;
  out << artifact_header(cfg, "metrics");
  const auto columns = metric_fields(MetricsRecord{});
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c].first;
  out << "\n";
  for (const auto& rec : history) {
    const auto fields = metric_fields(rec);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      out << (c ? "," : "");
      if (c == 0) {
        out << rec.epoch;
      } else {
        out << format_double(fields[c].second);
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string run_summary_json(const RunConfig& cfg, const std::vector<MetricsRecord>& history) {
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["seed"] = cfg.seed;
  j["config"] = json::parse(config_to_json(cfg, -1));
  j["epochs_completed"] = history.size();
  j["final"] = history.empty() ? json::object() : record_json(history.back());
  return j.dump(2) + "\n";
}

namespace {

void histogram_rows(std::ostringstream& out, const DensityStats& stats, Domain domain) {
  const auto d = static_cast<std::size_t>(domain);
  for (int kind = 0; kind < 2; ++kind) {
    const Histogram& h = kind == 0 ? stats.positive[d] : stats.negative[d];
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    const double total = static_cast<double>(std::max<std::size_t>(h.total(), 1));
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out << to_string(domain) << '\t' << (kind == 0 ? "positive" : "negative") << '\t'
          << format_double(h.lo + width * static_cast<double>(b)) << '\t'
          << format_double(h.lo + width * static_cast<double>(b + 1)) << '\t' << h.counts[b] << '\t'
          << format_double(static_cast<double>(h.counts[b]) / total) << "\n";
    }
  }
}

constexpr const char* kHistogramColumns = "domain\tkind\tbin_lo\tbin_hi\tcount\tfraction\n";

}  // namespace

std::string histogram_tsv(const RunConfig& cfg, const DensityStats& stats, Domain domain) {
  std::ostringstream out;
  out << artifact_header(cfg, "histogram") << kHistogramColumns;
  histogram_rows(out, stats, domain);
  return out.str();
}

std::string histogram_tsv(const RunConfig& cfg, const DensityStats& stats) {
  std::ostringstream out;
  out << artifact_header(cfg, "histogram") << kHistogramColumns;
  for (std::size_t d = 0; d < kDomainCount; ++d) histogram_rows(out, stats, static_cast<Domain>(d));
  return out.str();
}

std::string ablation_csv(const RunConfig& base, const AblationResult& result) {
  std::ostringstream out;
  out << artifact_header(base, "ablation " + result.spec.axis);
  const auto names = metric_fields(MetricsRecord{});
  out << "cell,seeds";
  for (std::size_t c = 1; c < names.size(); ++c) out << ',' << names[c].first << "_mean," << names[c].first << "_sd";
  out << "\n";
  for (const auto& cell : result.cells) {
    out << cell.cell.id << ',' << cell.seeds.size();
    for (std::size_t c = 1; c < names.size(); ++c) {
      const auto s = cell.summary(names[c].first);
      out << ',' << format_double(s.mean) << ',' << format_double(s.sd);
    }
    out << "\n";
  }
  return out.str();
}

std::string ablation_json(const RunConfig& base, const AblationResult& result) {
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["axis"] = result.spec.axis;
  j["base_config"] = json::parse(config_to_json(base, -1));
  j["seeds"] = result.spec.seeds;
  json cells = json::array();
  const auto names = metric_fields(MetricsRecord{});
  for (const auto& cell : result.cells) {
    json c;
    c["id"] = cell.cell.id;
    c["overrides"] = cell.cell.overrides;
    json summary = json::object();
    for (std::size_t m = 1; m < names.size(); ++m) {
      const auto s = cell.summary(names[m].first);
      summary[names[m].first] = {{"mean", s.mean}, {"sd", s.sd}};
    }
    c["summary"] = summary;
    json runs = json::array();
    for (std::size_t r = 0; r < cell.finals.size(); ++r) {
      json run = record_json(cell.finals[r]);
      run["seed"] = cell.seeds[r];
      runs.push_back(run);
    }
    c["runs"] = runs;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string dataset_binary(const Dataset& data) {
  std::ostringstream out(std::ios::binary);
  write_dataset_binary(out, data);
  return out.str();
}

}  // namespace uniclip

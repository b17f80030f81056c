#include <chrono>
#include <ctime>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "mfcs/io.hpp"

namespace mfcs {

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

namespace {

std::string format_extended(const ExtendedReal& v) { return v.to_string(); }

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<StepRecord>& records) {
  out << "seed,t,method,covered,width,metric,bound_relative,wall_ms\n";
  for (const auto& r : records) {
    out << r.seed << ',' << r.t << ',' << r.method << ',' << (r.covered ? 1 : 0) << ','
        << format_extended(r.width) << ',' << format_real(r.metric) << ','
        << (r.bound_relative ? format_real(*r.bound_relative) : "") << ','
        << (r.wall_ms ? fmt::format("{:.3f}", *r.wall_ms) : "") << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,t,n,coverage_mean,coverage_se,width_median,width_q25,width_q75,metric_mean,"
         "metric_se,inf_fraction,bound_relative_mean\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.t << ',' << r.n << ',' << format_real(r.coverage_mean) << ','
        << format_real(r.coverage_se) << ',' << format_extended(r.width_median) << ','
        << format_extended(r.width_q25) << ',' << format_extended(r.width_q75) << ','
        << format_real(r.metric_mean) << ',' << format_real(r.metric_se) << ','
        << format_real(r.inf_fraction) << ','
        << (r.bound_relative_mean ? format_real(*r.bound_relative_mean) : "") << '\n';
  }
}

void write_manifest_json(std::ostream& out, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = m.config_hash;
  j["tool_version"] = m.tool_version;
  j["seed_range"] = {m.seed_begin, m.seed_end};
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["outputs"] = m.outputs;
  auto errors = nlohmann::ordered_json::array();
  for (const auto& [seed, msg] : m.seed_errors) errors.push_back({{"seed", seed}, {"error", msg}});
  j["seed_errors"] = errors;
  out << j.dump(2) << '\n';
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mfcs

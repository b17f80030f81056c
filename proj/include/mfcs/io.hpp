#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mfcs/sim.hpp"

namespace mfcs {

/// Reads an INI document. Required: [experiment] mode, alpha, lambda, T.
/// Unknown keys and malformed values raise ConfigError naming the field.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Every resolved field as sorted "section.key=value" lines; identical for
/// documents that differ only in key order, spacing or omitted defaults.
std::string canonical_config(const ExperimentConfig& config);
/// 16 hex digits of the 64-bit FNV-1a hash of canonical_config.
std::string config_hash(const ExperimentConfig& config);

/// "A..B" (inclusive) or a single seed.
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text);

/// Shortest decimal that round-trips; "inf" / "-inf" for infinities.
std::string format_real(double v);

void write_records_csv(std::ostream& out, const std::vector<StepRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::uint64_t seed_begin = 0;
  std::uint64_t seed_end = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::uint64_t, std::string>> seed_errors;
};

void write_manifest_json(std::ostream& out, const RunManifest& manifest);

/// UTC timestamp in ISO 8601 form.
std::string utc_now();

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace mfcs

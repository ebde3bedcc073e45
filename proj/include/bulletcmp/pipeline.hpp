#pragma once

#include <string>
#include <vector>

#include "bulletcmp/analyze.hpp"
#include "bulletcmp/config.hpp"
#include "bulletcmp/records.hpp"

namespace bulletcmp {

/// Loads, validates and processes every manifest entry. Entries excluded in
/// the manifest, failing validation, or lacking data for extraction come back
/// as excluded records carrying the reason.
std::vector<LandRecord> extract_signals(const std::vector<ManifestEntry>& entries, const PipelineConfig& config);

/// Fallback crosscuts, missing shoulders and exclusions, one entry per scan.
Json flags_report(const std::vector<LandRecord>& records);

ComparisonSet compare_records(const std::vector<LandRecord>& records, const PipelineConfig& config, int threads = 0);

Analysis analyze_records(const std::vector<ScoreRecord>& scores, const PipelineConfig& config);

// ---- on-disk layout -------------------------------------------------------
// A signal directory holds one <bullet>-L<land>.json per scan, flags.json and
// config.json (the parameters that produced it).

std::string land_record_filename(const LandRecord& r);
void write_signal_dir(const std::string& dir, const std::vector<LandRecord>& records, const PipelineConfig& config);
std::vector<LandRecord> read_signal_dir(const std::string& dir);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

Json scores_to_json(const std::vector<ScoreRecord>& scores);
std::vector<ScoreRecord> scores_from_json(const Json& j);

}  // namespace bulletcmp

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bulletcmp/analyze.hpp"
#include "bulletcmp/compare.hpp"
#include "bulletcmp/scan_io.hpp"
#include "bulletcmp/signal.hpp"

namespace bulletcmp {

using Json = nlohmann::json;

/// "B" + 11 -> "B11"
std::string bullet_id(const std::string& barrel_id, int shot_number);
inline std::string bullet_id(const ScanMeta& m) { return bullet_id(m.barrel_id, m.shot_number); }

/// Everything known about one land scan after signal extraction. Excluded
/// scans keep their metadata and reason but carry no signal.
struct LandRecord {
    ScanMeta meta;
    bool excluded = false;
    std::string reason;
    std::optional<Signal> signal;
    std::optional<Profile> profile;
    GrooveDetection grooves;
    CrosscutChoice crosscut;
    bool crosscut_override = false;
    std::optional<HeightField> thumbnail;
    std::map<std::string, std::string> provenance;

    std::string bullet() const { return bullet_id(meta); }

    friend bool operator==(const LandRecord&, const LandRecord&) = default;
};

LandRecord make_land_record(const ScanRecord& scan, const LandSignal& ls, int thumbnail_factor);
LandRecord make_excluded_record(const ScanMeta& meta, std::string reason);

struct ScoreRecord {
    std::string bullet1, bullet2;
    int shot1 = 0, shot2 = 0;
    BulletScore score;
    LandMatrix matrix;

    friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

/// One record per unordered pair (self pairs included), in set order.
std::vector<ScoreRecord> score_records(const ComparisonSet& set);

/// Groups land records into bullets ordered by (barrel, shot). Excluded lands
/// stay empty slots.
std::vector<BulletSignals> bullets_from_records(const std::vector<LandRecord>& records);

/// Bullet ids in order of first appearance, plus the upper-triangular score
/// and reliability vectors analyze_scores expects. Throws if a pair is missing.
struct ScoreTable {
    std::vector<std::string> ids;
    std::vector<double> upper;
    std::vector<std::uint8_t> reliable;
    std::map<std::string, int> shots;
};
ScoreTable score_table(const std::vector<ScoreRecord>& scores);

// ---- JSON codecs --------------------------------------------------------
// Doubles that are NaN serialize as null and read back as NaN. Masked samples
// serialize as null and read back as 0; masks are strings of '0'/'1'.

Json to_json(const LandRecord& r);
LandRecord land_record_from_json(const Json& j);

Json to_json(const ScoreRecord& r);
ScoreRecord score_record_from_json(const Json& j);

Json to_json(const Analysis& a);
Analysis analysis_from_json(const Json& j);

Json to_json(const HeightField& f);
HeightField height_field_from_json(const Json& j);

/// Round to 9 significant digits (the precision files are written with).
double quantize9(double v);

/// Replaces every floating value in the tree by its quantized form.
void quantize_tree(Json& j);

/// Sorted keys, no whitespace, floats as %.9g, NaN/inf as null.
std::string canonical_dump(const Json& j);

}  // namespace bulletcmp

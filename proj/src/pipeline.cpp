#include "bulletcmp/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bulletcmp {

namespace fs = std::filesystem;

std::vector<LandRecord> extract_signals(const std::vector<ManifestEntry>& entries, const PipelineConfig& config) {
    std::vector<LandRecord> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.excluded) {
            out.push_back(make_excluded_record(e.meta, e.reason));
            continue;
        }
        ScanRecord scan = load_scan(e.path, e.meta);
        scan.meta = e.meta;
        if (auto reason = validate(scan, config.validation)) {
            out.push_back(make_excluded_record(e.meta, *reason));
            continue;
        }
        try {
            const auto ls = process_scan(scan, config.signal, e.crosscut_y);
            out.push_back(make_land_record(scan, ls, config.thumbnail_factor));
        } catch (const InsufficientData& err) {
            out.push_back(make_excluded_record(e.meta, err.what()));
        }
    }
    return out;
}

Json flags_report(const std::vector<LandRecord>& records) {
    Json scans = Json::array();
    int fallback = 0, missing = 0, excluded = 0;
    for (const auto& r : records) {
        Json flags = Json::array();
        if (r.excluded) {
            flags.push_back("excluded");
            ++excluded;
        } else {
            if (r.crosscut.fallback) {
                flags.push_back("fallback_crosscut");
                ++fallback;
            }
            if (r.crosscut_override) flags.push_back("crosscut_override");
            if (r.grooves.left_missing) flags.push_back("left_shoulder_missing");
            if (r.grooves.right_missing) flags.push_back("right_shoulder_missing");
            if (r.grooves.left_missing || r.grooves.right_missing) ++missing;
        }
        if (flags.empty()) continue;
        scans.push_back({{"bullet", r.bullet()}, {"land", r.meta.land_index}, {"flags", std::move(flags)},
                         {"reason", r.reason}});
    }
    return {{"scans", std::move(scans)},
            {"counts", {{"total", records.size()},
                        {"excluded", excluded},
                        {"fallback_crosscut", fallback},
                        {"missing_shoulder", missing}}}};
}

ComparisonSet compare_records(const std::vector<LandRecord>& records, const PipelineConfig& config, int threads) {
    return compare_set(bullets_from_records(records), config.compare, threads);
}

Analysis analyze_records(const std::vector<ScoreRecord>& scores, const PipelineConfig& config) {
    const auto t = score_table(scores);
    return analyze_scores(t.ids, t.upper, t.reliable, t.shots, config.analysis);
}

std::string land_record_filename(const LandRecord& r) {
    return r.bullet() + "-L" + std::to_string(r.meta.land_index) + ".json";
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << canonical_dump(j) << '\n';
    if (!out.flush()) throw std::runtime_error("write to " + path + " failed");
}

Json read_json_file(const std::string& path) {
    const auto text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw std::runtime_error(path + ": malformed JSON at byte " + std::to_string(e.byte));
    }
}

void write_signal_dir(const std::string& dir, const std::vector<LandRecord>& records, const PipelineConfig& config) {
    fs::create_directories(dir);
    for (const auto& r : records) write_json_file((fs::path(dir) / land_record_filename(r)).string(), to_json(r));
    write_json_file((fs::path(dir) / "flags.json").string(), flags_report(records));
    write_json_file((fs::path(dir) / "config.json").string(), config.snapshot());
}

std::vector<LandRecord> read_signal_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (!entry.is_regular_file() || p.extension() != ".json") continue;
        if (p.filename() == "flags.json" || p.filename() == "config.json") continue;
        files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    std::vector<LandRecord> out;
    out.reserve(files.size());
    for (const auto& p : files) {
        try {
            out.push_back(land_record_from_json(read_json_file(p.string())));
        } catch (const Json::exception& e) {
            throw std::runtime_error(p.string() + ": " + e.what());
        }
    }
    return out;
}

Json scores_to_json(const std::vector<ScoreRecord>& scores) {
    Json arr = Json::array();
    for (const auto& s : scores) arr.push_back(to_json(s));
    return arr;
}

std::vector<ScoreRecord> scores_from_json(const Json& j) {
    if (!j.is_array()) throw std::runtime_error("scores file must hold a JSON list");
    std::vector<ScoreRecord> out;
    out.reserve(j.size());
    for (const auto& s : j) out.push_back(score_record_from_json(s));
    return out;
}

}  // namespace bulletcmp

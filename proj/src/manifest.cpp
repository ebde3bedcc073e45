#include <boost/tokenizer.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>

#include "bulletcmp/scan_io.hpp"

namespace bulletcmp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    boost::escaped_list_separator<char> sep('\\', ',', '"');
    boost::tokenizer<boost::escaped_list_separator<char>> tok(line, sep);
    return {tok.begin(), tok.end()};
}

bool parse_flag(const std::string& s, const std::string& where) {
    std::string v = s;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v.empty() || v == "0" || v == "false" || v == "no") return false;
    if (v == "1" || v == "true" || v == "yes") return true;
    throw ScanFormatError(where, "expected a boolean, got '" + s + "'");
}

int parse_int(const std::string& s, const std::string& where) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ScanFormatError(where, "expected an integer, got '" + s + "'");
    return v;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                if (!cur.empty() && cur.back() == '\r') cur.pop_back();
                lines.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) lines.push_back(std::move(cur));
    }
    if (lines.empty()) throw ScanFormatError("manifest", "empty");

    const auto header = split_csv_line(lines.front());
    const std::vector<std::string> required{"path", "barrel_id", "shot_number", "land_index", "excluded", "reason"};
    std::vector<std::size_t> col(required.size());
    for (std::size_t i = 0; i < required.size(); ++i) {
        auto it = std::find(header.begin(), header.end(), required[i]);
        if (it == header.end()) throw ScanFormatError("manifest", "missing column '" + required[i] + "'");
        col[i] = static_cast<std::size_t>(it - header.begin());
    }
    const auto cut_it = std::find(header.begin(), header.end(), "crosscut_y");
    const std::optional<std::size_t> cut_col =
        cut_it == header.end() ? std::nullopt : std::optional<std::size_t>(cut_it - header.begin());

    std::vector<ManifestEntry> out;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::string where = "manifest line " + std::to_string(li + 1);
        auto cells = split_csv_line(lines[li]);
        cells.resize(std::max(cells.size(), header.size()));
        ManifestEntry e;
        e.path = cells[col[0]];
        e.meta.barrel_id = cells[col[1]];
        e.meta.shot_number = parse_int(cells[col[2]], where);
        e.meta.land_index = parse_int(cells[col[3]], where);
        e.excluded = parse_flag(cells[col[4]], where);
        e.reason = cells[col[5]];
        if (e.path.empty()) throw ScanFormatError(where, "empty path");
        if (e.meta.land_index < 1 || e.meta.land_index > 6) throw ScanFormatError(where, "land_index must be 1..6");
        if (e.excluded && e.reason.empty()) throw ScanFormatError(where, "excluded scan needs a reason");
        if (cut_col && !cells[*cut_col].empty()) {
            try {
                e.crosscut_y = std::stod(cells[*cut_col]);
            } catch (const std::exception&) {
                throw ScanFormatError(where, "bad crosscut_y '" + cells[*cut_col] + "'");
            }
        }
        e.meta.source_path = e.path;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    auto entries = parse_manifest(read_file(path));
    const auto base = std::filesystem::path(path).parent_path();
    for (auto& e : entries) {
        std::filesystem::path p(e.path);
        if (p.is_relative()) e.path = (base / p).lexically_normal().string();
    }
    return entries;
}

}  // namespace bulletcmp

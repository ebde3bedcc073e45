#include "bulletcmp/records.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace bulletcmp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double get_num(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Json masked_array(const std::vector<double>& values, const std::vector<std::uint8_t>& mask) {
    Json a = Json::array();
    auto& arr = a.get_ref<Json::array_t&>();
    arr.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) arr.emplace_back(mask[i] ? num(values[i]) : Json(nullptr));
    return a;
}

std::string mask_string(const std::vector<std::uint8_t>& mask) {
    std::string s(mask.size(), '0');
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) s[i] = '1';
    return s;
}

void read_masked(const Json& values, const Json& mask, std::vector<double>& out_values,
                 std::vector<std::uint8_t>& out_mask) {
    const auto& arr = values.get_ref<const Json::array_t&>();
    const auto m = mask.get<std::string>();
    if (m.size() != arr.size()) throw std::runtime_error("mask length " + std::to_string(m.size()) +
                                                         " does not match " + std::to_string(arr.size()) + " values");
    out_values.assign(arr.size(), 0.0);
    out_mask.assign(arr.size(), 0);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (m[i] == '1') {
            if (arr[i].is_null()) throw std::runtime_error("measured sample " + std::to_string(i) + " is null");
            out_values[i] = arr[i].get<double>();
            out_mask[i] = 1;
        } else if (m[i] != '0') {
            throw std::runtime_error("mask holds a character other than 0/1");
        }
    }
}

Json bounds_json(const GrooveBounds& b) { return {{"left_index", b.left_index}, {"right_index", b.right_index}}; }

GrooveBounds bounds_from(const Json& j) {
    return {j.at("left_index").get<std::size_t>(), j.at("right_index").get<std::size_t>()};
}

}  // namespace

std::string bullet_id(const std::string& barrel_id, int shot_number) { return barrel_id + std::to_string(shot_number); }

// ---- building records ---------------------------------------------------

LandRecord make_land_record(const ScanRecord& scan, const LandSignal& ls, int thumbnail_factor) {
    LandRecord r;
    r.meta = scan.meta;
    r.signal = ls.signal;
    r.signal->meta = scan.meta;
    r.profile = ls.profile;
    r.grooves = ls.grooves;
    r.crosscut = ls.crosscut;
    r.crosscut_override = ls.crosscut_override;
    if (thumbnail_factor > 0) r.thumbnail = downsample(scan.field, thumbnail_factor);
    r.provenance = scan.provenance;
    return r;
}

LandRecord make_excluded_record(const ScanMeta& meta, std::string reason) {
    LandRecord r;
    r.meta = meta;
    r.excluded = true;
    r.reason = std::move(reason);
    return r;
}

std::vector<ScoreRecord> score_records(const ComparisonSet& set) {
    std::vector<ScoreRecord> out;
    const auto& bullets = set.bullets();
    out.reserve(set.pairs().size());
    for (std::size_t i = 0; i < bullets.size(); ++i) {
        for (std::size_t j = i; j < bullets.size(); ++j) {
            const auto& pc = set.pair(i, j);
            out.push_back({bullets[i].id, bullets[j].id, bullets[i].shot_number, bullets[j].shot_number, pc.score,
                           pc.matrix});
        }
    }
    return out;
}

std::vector<BulletSignals> bullets_from_records(const std::vector<LandRecord>& records) {
    std::map<std::tuple<std::string, int>, BulletSignals> by_key;
    for (const auto& r : records) {
        auto& b = by_key[{r.meta.barrel_id, r.meta.shot_number}];
        b.id = r.bullet();
        b.barrel_id = r.meta.barrel_id;
        b.shot_number = r.meta.shot_number;
        if (r.meta.land_index < 1 || r.meta.land_index > kLands)
            throw std::invalid_argument(b.id + ": land index " + std::to_string(r.meta.land_index) + " out of range");
        if (r.excluded || !r.signal) continue;
        auto& slot = b.lands[static_cast<std::size_t>(r.meta.land_index - 1)];
        if (slot) throw std::invalid_argument(b.id + ": land " + std::to_string(r.meta.land_index) + " given twice");
        slot = std::make_shared<const Signal>(*r.signal);
    }
    std::vector<BulletSignals> out;
    out.reserve(by_key.size());
    for (auto& [key, b] : by_key) out.push_back(std::move(b));
    return out;
}

ScoreTable score_table(const std::vector<ScoreRecord>& scores) {
    ScoreTable t;
    std::map<std::string, std::size_t> index;
    auto note = [&](const std::string& id, int shot) {
        if (index.emplace(id, t.ids.size()).second) {
            t.ids.push_back(id);
            t.shots[id] = shot;
        }
    };
    for (const auto& s : scores) {
        note(s.bullet1, s.shot1);
        note(s.bullet2, s.shot2);
    }
    const std::size_t k = t.ids.size();
    t.upper.assign(k * (k + 1) / 2, kNaN);
    t.reliable.assign(t.upper.size(), 0);
    std::vector<std::uint8_t> seen(t.upper.size(), 0);
    for (const auto& s : scores) {
        const auto p = ComparisonSet::pair_index(index[s.bullet1], index[s.bullet2], k);
        if (seen[p]) throw std::invalid_argument("pair " + s.bullet1 + "/" + s.bullet2 + " appears twice");
        seen[p] = 1;
        t.upper[p] = s.score.ccf_diff;
        t.reliable[p] = s.score.unreliable ? 0 : 1;
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j)
            if (!seen[ComparisonSet::pair_index(i, j, k)])
                throw std::invalid_argument("no score for pair " + t.ids[i] + "/" + t.ids[j]);
    return t;
}

// ---- JSON -----------------------------------------------------------------

Json to_json(const HeightField& f) {
    return {{"n_cols", f.n_cols}, {"n_rows", f.n_rows}, {"x_inc", f.x_inc}, {"y_inc", f.y_inc},
            {"heights", masked_array(f.heights, f.mask)}};
}

HeightField height_field_from_json(const Json& j) {
    HeightField f(j.at("n_cols").get<std::size_t>(), j.at("n_rows").get<std::size_t>(), j.at("x_inc").get<double>(),
                  j.at("y_inc").get<double>());
    const auto& arr = j.at("heights").get_ref<const Json::array_t&>();
    if (arr.size() != f.heights.size()) throw std::runtime_error("height grid size does not match its dimensions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (arr[i].is_null()) {
            f.heights[i] = 0;
            f.mask[i] = 0;
        } else {
            f.heights[i] = arr[i].get<double>();
        }
    }
    return f;
}

Json to_json(const LandRecord& r) {
    Json j;
    j["barrel_id"] = r.meta.barrel_id;
    j["shot_number"] = r.meta.shot_number;
    j["land_index"] = r.meta.land_index;
    j["source_path"] = r.meta.source_path;
    j["bullet"] = r.bullet();
    j["excluded"] = r.excluded;
    j["reason"] = r.reason;
    j["provenance"] = r.provenance;
    if (r.signal) {
        const auto& s = *r.signal;
        j["signal"] = {{"values", masked_array(s.values, s.mask)},
                       {"mask", mask_string(s.mask)},
                       {"x_inc", s.x_inc},
                       {"y_location", num(s.y_location)},
                       {"bounds", bounds_json(s.bounds)}};
    } else {
        j["signal"] = nullptr;
    }
    if (r.profile) {
        const auto& p = *r.profile;
        j["profile"] = {{"heights", masked_array(p.heights, p.mask)},
                        {"mask", mask_string(p.mask)},
                        {"x_inc", p.x_inc},
                        {"y_location", num(p.y_location)}};
    } else {
        j["profile"] = nullptr;
    }
    j["grooves"] = {{"bounds", bounds_json(r.grooves.bounds)},
                    {"left_missing", r.grooves.left_missing},
                    {"right_missing", r.grooves.right_missing}};
    j["crosscut"] = {{"y_location", num(r.crosscut.y_location)},
                     {"fallback", r.crosscut.fallback},
                     {"override", r.crosscut_override}};
    j["thumbnail"] = r.thumbnail ? to_json(*r.thumbnail) : Json(nullptr);
    return j;
}

LandRecord land_record_from_json(const Json& j) {
    LandRecord r;
    r.meta.barrel_id = j.at("barrel_id").get<std::string>();
    r.meta.shot_number = j.at("shot_number").get<int>();
    r.meta.land_index = j.at("land_index").get<int>();
    r.meta.source_path = j.at("source_path").get<std::string>();
    r.excluded = j.at("excluded").get<bool>();
    r.reason = j.at("reason").get<std::string>();
    r.provenance = j.at("provenance").get<std::map<std::string, std::string>>();
    if (const auto& js = j.at("signal"); !js.is_null()) {
        Signal s;
        read_masked(js.at("values"), js.at("mask"), s.values, s.mask);
        s.x_inc = js.at("x_inc").get<double>();
        s.y_location = get_num(js.at("y_location"));
        s.bounds = bounds_from(js.at("bounds"));
        s.meta = r.meta;
        r.signal = std::move(s);
    }
    if (const auto& jp = j.at("profile"); !jp.is_null()) {
        Profile p;
        read_masked(jp.at("heights"), jp.at("mask"), p.heights, p.mask);
        p.x_inc = jp.at("x_inc").get<double>();
        p.y_location = get_num(jp.at("y_location"));
        r.profile = std::move(p);
    }
    const auto& g = j.at("grooves");
    r.grooves.bounds = bounds_from(g.at("bounds"));
    r.grooves.left_missing = g.at("left_missing").get<bool>();
    r.grooves.right_missing = g.at("right_missing").get<bool>();
    const auto& c = j.at("crosscut");
    r.crosscut.y_location = get_num(c.at("y_location"));
    r.crosscut.fallback = c.at("fallback").get<bool>();
    r.crosscut_override = c.at("override").get<bool>();
    if (const auto& jt = j.at("thumbnail"); !jt.is_null()) r.thumbnail = height_field_from_json(jt);
    return r;
}

Json to_json(const ScoreRecord& r) {
    Json entries = Json::array();
    for (int i = 0; i < kLands; ++i) {
        for (int jj = 0; jj < kLands; ++jj) {
            const auto& e = r.matrix.at(i, jj);
            entries.push_back({{"i", i + 1},
                               {"j", jj + 1},
                               {"ccf", num(e.ccf)},
                               {"lag", e.lag},
                               {"overlap", e.overlap},
                               {"valid", e.valid}});
        }
    }
    const auto& s = r.score;
    return {{"bullet1", r.bullet1},
            {"bullet2", r.bullet2},
            {"shot1", r.shot1},
            {"shot2", r.shot2},
            {"phase", s.phase},
            {"in_phase_avg", num(s.in_phase_avg)},
            {"out_phase_avg", num(s.out_phase_avg)},
            {"ccf_diff", num(s.ccf_diff)},
            {"n_in_phase", s.n_in_phase},
            {"n_out_phase", s.n_out_phase},
            {"unreliable_flag", s.unreliable},
            {"exclusion_adjusted", s.exclusion_adjusted},
            {"land_entries", std::move(entries)}};
}

ScoreRecord score_record_from_json(const Json& j) {
    ScoreRecord r;
    r.bullet1 = j.at("bullet1").get<std::string>();
    r.bullet2 = j.at("bullet2").get<std::string>();
    r.shot1 = j.at("shot1").get<int>();
    r.shot2 = j.at("shot2").get<int>();
    r.matrix.bullet1_id = r.bullet1;
    r.matrix.bullet2_id = r.bullet2;
    auto& s = r.score;
    s.phase = j.at("phase").get<int>();
    if (s.phase < 0 || s.phase >= kLands) throw std::runtime_error("phase out of range");
    s.in_phase_avg = get_num(j.at("in_phase_avg"));
    s.out_phase_avg = get_num(j.at("out_phase_avg"));
    s.ccf_diff = get_num(j.at("ccf_diff"));
    s.n_in_phase = j.at("n_in_phase").get<int>();
    s.n_out_phase = j.at("n_out_phase").get<int>();
    s.unreliable = j.at("unreliable_flag").get<bool>();
    s.exclusion_adjusted = j.at("exclusion_adjusted").get<bool>();
    const auto& entries = j.at("land_entries");
    if (entries.size() != kLands * kLands)
        throw std::runtime_error("pair " + r.bullet1 + "/" + r.bullet2 + " has " + std::to_string(entries.size()) +
                                 " land entries, expected 36");
    for (const auto& e : entries) {
        const int i = e.at("i").get<int>(), jj = e.at("j").get<int>();
        if (i < 1 || i > kLands || jj < 1 || jj > kLands) throw std::runtime_error("land entry index out of range");
        auto& out = r.matrix.at(i - 1, jj - 1);
        out.ccf = get_num(e.at("ccf"));
        out.lag = e.at("lag").get<int>();
        out.overlap = e.at("overlap").get<std::size_t>();
        out.valid = e.at("valid").get<bool>();
    }
    return r;
}

Json to_json(const Analysis& a) {
    Json merges = Json::array();
    for (const auto& m : a.dendrogram.merges)
        merges.push_back({{"a", m.a}, {"b", m.b}, {"height", num(m.height)}, {"size", m.size}});
    Json points = Json::array();
    for (const auto& p : a.variogram.points)
        points.push_back({{"distance", p.distance},
                          {"score", num(p.score)},
                          {"bullet1", p.bullet1},
                          {"bullet2", p.bullet2},
                          {"reliable", p.reliable}});
    Json trend_y = Json::array();
    for (double y : a.variogram.trend.ys) trend_y.push_back(num(y));
    Json medians = Json::array();
    for (double m : a.outliers.medians) medians.push_back(num(m));
    Json flags = Json::array();
    for (const auto& f : a.outliers.flags)
        flags.push_back(
            {{"bullet_id", f.bullet_id}, {"median_score", num(f.median_score)}, {"criterion", to_string(f.criterion)}});
    Json dflags = Json::array();
    for (const auto& [x, y] : a.distance_flags) dflags.push_back({x, y});
    const auto& o = a.outliers;
    return {{"ids", a.ids},
            {"dendrogram", {{"leaf_ids", a.dendrogram.leaf_ids}, {"merges", std::move(merges)}}},
            {"leaf_order", a.leaf_order},
            {"variogram", {{"points", std::move(points)}, {"trend", {{"xs", a.variogram.trend.xs}, {"ys", trend_y}}}}},
            {"outliers",
             {{"medians", std::move(medians)},
              {"centre", num(o.centre)},
              {"mad", num(o.mad)},
              {"quantile_threshold", num(o.quantile_threshold)},
              {"band_threshold", num(o.band_threshold)},
              {"binding", to_string(o.binding)},
              {"flags", std::move(flags)}}},
            {"distance_flags", std::move(dflags)}};
}

namespace {

OutlierCriterion criterion_from(const std::string& s) {
    if (s == to_string(OutlierCriterion::quantile)) return OutlierCriterion::quantile;
    if (s == to_string(OutlierCriterion::mad_band)) return OutlierCriterion::mad_band;
    throw std::runtime_error("unknown outlier criterion '" + s + "'");
}

}  // namespace

Analysis analysis_from_json(const Json& j) {
    Analysis a;
    a.ids = j.at("ids").get<std::vector<std::string>>();
    const auto& d = j.at("dendrogram");
    a.dendrogram.leaf_ids = d.at("leaf_ids").get<std::vector<std::string>>();
    for (const auto& m : d.at("merges"))
        a.dendrogram.merges.push_back({m.at("a").get<std::size_t>(), m.at("b").get<std::size_t>(),
                                       get_num(m.at("height")), m.at("size").get<std::size_t>()});
    a.leaf_order = j.at("leaf_order").get<std::vector<std::string>>();
    const auto& v = j.at("variogram");
    for (const auto& p : v.at("points"))
        a.variogram.points.push_back({p.at("distance").get<int>(), get_num(p.at("score")),
                                      p.at("bullet1").get<std::string>(), p.at("bullet2").get<std::string>(),
                                      p.at("reliable").get<bool>()});
    const auto& t = v.at("trend");
    for (const auto& x : t.at("xs")) a.variogram.trend.xs.push_back(get_num(x));
    for (const auto& y : t.at("ys")) a.variogram.trend.ys.push_back(get_num(y));
    const auto& o = j.at("outliers");
    for (const auto& m : o.at("medians")) a.outliers.medians.push_back(get_num(m));
    a.outliers.centre = get_num(o.at("centre"));
    a.outliers.mad = get_num(o.at("mad"));
    a.outliers.quantile_threshold = get_num(o.at("quantile_threshold"));
    a.outliers.band_threshold = get_num(o.at("band_threshold"));
    a.outliers.binding = criterion_from(o.at("binding").get<std::string>());
    for (const auto& f : o.at("flags"))
        a.outliers.flags.push_back({f.at("bullet_id").get<std::string>(), get_num(f.at("median_score")),
                                    criterion_from(f.at("criterion").get<std::string>())});
    for (const auto& p : j.at("distance_flags"))
        a.distance_flags.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    return a;
}

// ---- canonical text -------------------------------------------------------

double quantize9(double v) {
    if (!std::isfinite(v)) return v;
    if (v == 0) return 0.0;  // drops the sign of -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    double out = 0;
    std::from_chars(buf, res.ptr, out);
    return out;
}

void quantize_tree(Json& j) {
    switch (j.type()) {
        case Json::value_t::number_float: {
            const double q = quantize9(j.get<double>());
            j = std::isfinite(q) ? Json(q) : Json(nullptr);
            break;
        }
        case Json::value_t::array:
        case Json::value_t::object:
            for (auto& child : j) quantize_tree(child);
            break;
        default:
            break;
    }
}

namespace {

void dump_string(const std::string& s, std::string& out) {
    out += '"';
    for (const unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += '"';
}

void dump(const Json& j, std::string& out) {
    char buf[32];
    switch (j.type()) {
        case Json::value_t::null: out += "null"; break;
        case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
        case Json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
        case Json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
            } else {
                const auto res =
                    std::to_chars(buf, buf + sizeof buf, v == 0 ? 0.0 : v, std::chars_format::general, 9);
                out.append(buf, res.ptr);
            }
            break;
        }
        case Json::value_t::string: dump_string(j.get_ref<const std::string&>(), out); break;
        case Json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += ',';
                first = false;
                dump(e, out);
            }
            out += ']';
            break;
        }
        case Json::value_t::object: {
            // nlohmann::json keeps object keys in a std::map, so iteration is sorted
            out += '{';
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ',';
                first = false;
                dump_string(k, out);
                out += ':';
                dump(v, out);
            }
            out += '}';
            break;
        }
        default: throw std::runtime_error("canonical_dump: unsupported JSON value");
    }
}

}  // namespace

std::string canonical_dump(const Json& j) {
    std::string out;
    dump(j, out);
    return out;
}

}  // namespace bulletcmp

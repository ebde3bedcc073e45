#include "bulletcmp/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

namespace bulletcmp {

const LandRecord* Bundle::land(const std::string& bullet, int land_index) const {
    for (const auto& r : lands)
        if (r.meta.land_index == land_index && r.bullet() == bullet) return &r;
    return nullptr;
}

const ScoreRecord* Bundle::score(const std::string& b1, const std::string& b2) const {
    for (const auto& s : scores)
        if ((s.bullet1 == b1 && s.bullet2 == b2) || (s.bullet1 == b2 && s.bullet2 == b1)) return &s;
    return nullptr;
}

namespace {

void check_references(const Bundle& b) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < b.manifest.bullets.size(); ++i) index.emplace(b.manifest.bullets[i].id, i);
    auto known = [&](const std::string& id, const char* where) {
        if (!index.count(id)) throw DanglingReference(std::string(where) + " refers to unknown bullet '" + id + "'");
    };
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& s : b.scores) {
        known(s.bullet1, "score");
        known(s.bullet2, "score");
        if (s.matrix.bullet1_id != s.bullet1 || s.matrix.bullet2_id != s.bullet2)
            throw BundleError("land matrix ids do not match score " + s.bullet1 + "/" + s.bullet2);
        const auto i = index[s.bullet1], j = index[s.bullet2];
        if (!pairs.emplace(std::min(i, j), std::max(i, j)).second)
            throw BundleError("pair " + s.bullet1 + "/" + s.bullet2 + " scored twice");
    }
    const auto& a = b.analysis;
    for (const auto& id : a.ids) known(id, "analysis");
    for (const auto& id : a.leaf_order) known(id, "leaf order");
    for (const auto& id : a.dendrogram.leaf_ids) known(id, "dendrogram");
    for (const auto& p : a.variogram.points) {
        known(p.bullet1, "variogram");
        known(p.bullet2, "variogram");
    }
    for (const auto& f : a.outliers.flags) known(f.bullet_id, "outlier flag");
    for (const auto& [x, y] : a.distance_flags) {
        known(x, "distance flag");
        known(y, "distance flag");
    }
}

BundleManifest derive_manifest(const std::vector<LandRecord>& lands) {
    BundleManifest m;
    std::set<std::string> barrels;
    std::map<std::string, std::tuple<std::string, int>> seen;
    for (const auto& r : lands) {
        barrels.insert(r.meta.barrel_id);
        const auto id = r.bullet();
        const auto key = std::make_tuple(r.meta.barrel_id, r.meta.shot_number);
        if (auto [it, inserted] = seen.emplace(id, key); !inserted) {
            if (it->second != key) throw BundleError("bullet id '" + id + "' is ambiguous");
        } else {
            m.bullets.push_back({id, r.meta.barrel_id, r.meta.shot_number});
        }
        if (r.excluded) m.exclusions.push_back({id, r.meta.land_index, r.reason});
    }
    m.barrels.assign(barrels.begin(), barrels.end());
    return m;
}

}  // namespace

Bundle build_bundle(std::vector<LandRecord> lands, std::vector<ScoreRecord> scores, Analysis analysis,
                    std::map<std::string, double> config) {
    std::sort(lands.begin(), lands.end(), [](const LandRecord& x, const LandRecord& y) {
        return std::tie(x.meta.barrel_id, x.meta.shot_number, x.meta.land_index) <
               std::tie(y.meta.barrel_id, y.meta.shot_number, y.meta.land_index);
    });
    for (std::size_t i = 1; i < lands.size(); ++i)
        if (lands[i].meta.barrel_id == lands[i - 1].meta.barrel_id &&
            lands[i].meta.shot_number == lands[i - 1].meta.shot_number &&
            lands[i].meta.land_index == lands[i - 1].meta.land_index)
            throw BundleError("land " + std::to_string(lands[i].meta.land_index) + " of " + lands[i].bullet() +
                              " given twice");

    Bundle b;
    b.manifest = derive_manifest(lands);
    b.lands = std::move(lands);
    b.scores = std::move(scores);
    b.analysis = std::move(analysis);
    b.config = std::move(config);
    check_references(b);

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < b.manifest.bullets.size(); ++i) index.emplace(b.manifest.bullets[i].id, i);
    auto key = [&](const ScoreRecord& s) {
        const auto i = index.at(s.bullet1), j = index.at(s.bullet2);
        return std::make_pair(std::min(i, j), std::max(i, j));
    };
    std::stable_sort(b.scores.begin(), b.scores.end(),
                     [&](const ScoreRecord& x, const ScoreRecord& y) { return key(x) < key(y); });

    // Round every number to its written precision.
    auto j = to_json(b);
    quantize_tree(j);
    return bundle_from_json(j);
}

Json to_json(const BundleManifest& m) {
    Json bullets = Json::array();
    for (const auto& b : m.bullets) bullets.push_back({{"id", b.id}, {"barrel", b.barrel_id}, {"shot", b.shot_number}});
    Json exclusions = Json::array();
    for (const auto& e : m.exclusions)
        exclusions.push_back({{"bullet", e.bullet_id}, {"land", e.land_index}, {"reason", e.reason}});
    return {{"barrels", m.barrels}, {"bullets", std::move(bullets)}, {"exclusions", std::move(exclusions)}};
}

Json to_json(const Bundle& b) {
    Json lands = Json::array();
    for (const auto& r : b.lands) lands.push_back(to_json(r));
    Json scores = Json::array();
    for (const auto& s : b.scores) scores.push_back(to_json(s));
    return {{"schema_version", b.schema_version},
            {"manifest", to_json(b.manifest)},
            {"lands", std::move(lands)},
            {"scores", std::move(scores)},
            {"analysis", to_json(b.analysis)},
            {"config", b.config}};
}

Bundle bundle_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("schema_version") || !j.at("schema_version").is_number_integer())
        throw BundleError("bundle has no integer schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kBundleSchemaVersion) throw SchemaVersionError(version, kBundleSchemaVersion);

    Bundle b;
    try {
        const auto& m = j.at("manifest");
        b.manifest.barrels = m.at("barrels").get<std::vector<std::string>>();
        for (const auto& x : m.at("bullets"))
            b.manifest.bullets.push_back(
                {x.at("id").get<std::string>(), x.at("barrel").get<std::string>(), x.at("shot").get<int>()});
        for (const auto& x : m.at("exclusions"))
            b.manifest.exclusions.push_back(
                {x.at("bullet").get<std::string>(), x.at("land").get<int>(), x.at("reason").get<std::string>()});
        for (const auto& x : j.at("lands")) b.lands.push_back(land_record_from_json(x));
        for (const auto& x : j.at("scores")) b.scores.push_back(score_record_from_json(x));
        b.analysis = analysis_from_json(j.at("analysis"));
        b.config = j.at("config").get<std::map<std::string, double>>();
    } catch (const Json::exception& e) {
        throw BundleError(std::string("bundle content: ") + e.what());
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const BundleError*>(&e)) throw;
        throw BundleError(std::string("bundle content: ") + e.what());
    }
    check_references(b);
    return b;
}

std::string serialize_bundle(const Bundle& b) { return canonical_dump(to_json(b)); }

Bundle parse_bundle(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw BundleParseError(e.byte, e.what());
    }
    return bundle_from_json(j);
}

void write_bundle(const Bundle& b, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << serialize_bundle(b);
    if (!out.flush()) throw std::runtime_error("write to " + path + " failed");
}

Bundle read_bundle(const std::string& path) { return parse_bundle(read_file(path)); }

}  // namespace bulletcmp

#include "bulletcmp/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <httplib.h>

namespace bulletcmp {

namespace fs = std::filesystem;

namespace {

HttpResponse ok_json(const Json& j) { return {200, "application/json", canonical_dump(j)}; }

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const auto next = path.find('/', pos);
        const auto end = next == std::string::npos ? path.size() : next;
        if (end > pos) parts.push_back(path.substr(pos, end - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return parts;
}

Json score_summary(const ScoreRecord& s) {
    auto j = to_json(s);
    j.erase("land_entries");
    return j;
}

// The stored record seen from the other bullet: rows and columns swap, lags
// change sign, and the cyclic phase p becomes (6 - p) mod 6.
ScoreRecord transposed(const ScoreRecord& s) {
    ScoreRecord t = s;
    std::swap(t.bullet1, t.bullet2);
    std::swap(t.shot1, t.shot2);
    t.matrix.bullet1_id = t.bullet1;
    t.matrix.bullet2_id = t.bullet2;
    for (int i = 0; i < kLands; ++i)
        for (int j = 0; j < kLands; ++j) {
            t.matrix.at(i, j) = s.matrix.at(j, i);
            t.matrix.at(i, j).lag = -s.matrix.at(j, i).lag;
        }
    t.score.phase = (kLands - s.score.phase) % kLands;
    return t;
}

const char* content_type_for(const fs::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ico") return "image/x-icon";
    return "application/octet-stream";
}

}  // namespace

HttpResponse json_error(int status, const std::string& message) {
    return {status, "application/json", canonical_dump(Json{{"error", message}, {"status", status}})};
}

BundleService::BundleService(Bundle bundle, std::string static_dir)
    : bundle_(std::move(bundle)), static_dir_(std::move(static_dir)) {
    manifest_body_ = canonical_dump(to_json(bundle_.manifest));
    analysis_body_ = canonical_dump(to_json(bundle_.analysis));

    Json scores = Json::array();
    Json unreliable = Json::array();
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : bundle_.scores) {
        scores.push_back(score_summary(s));
        if (s.score.unreliable) unreliable.push_back({s.bullet1, s.bullet2});
        if (std::isfinite(s.score.ccf_diff)) {
            lo = std::min(lo, s.score.ccf_diff);
            hi = std::max(hi, s.score.ccf_diff);
        }
    }
    Json ids = Json::array();
    for (const auto& b : bundle_.manifest.bullets) ids.push_back(b.id);
    Json outliers = Json::array();
    for (const auto& f : bundle_.analysis.outliers.flags)
        outliers.push_back({{"bullet_id", f.bullet_id}, {"median_score", f.median_score},
                            {"criterion", to_string(f.criterion)}});
    Json distance_flags = Json::array();
    for (const auto& [a, b] : bundle_.analysis.distance_flags) distance_flags.push_back({a, b});
    Json limits = lo <= hi ? Json{{"min", lo}, {"max", hi}} : Json{{"min", nullptr}, {"max", nullptr}};
    scores_body_ = canonical_dump(Json{{"bullets", std::move(ids)},
                                       {"leaf_order", bundle_.analysis.leaf_order},
                                       {"scores", std::move(scores)},
                                       {"score_limits", std::move(limits)},
                                       {"flags",
                                        {{"outliers", std::move(outliers)},
                                         {"unreliable_pairs", std::move(unreliable)},
                                         {"distance_flags", std::move(distance_flags)}}}});
}

HttpResponse BundleService::get(const std::string& path) const {
    const auto parts = split_path(path);
    if (!parts.empty() && parts[0] == "api") {
        if (parts.size() == 2 && parts[1] == "manifest") return {200, "application/json", manifest_body_};
        if (parts.size() == 2 && parts[1] == "scores") return {200, "application/json", scores_body_};
        if (parts.size() == 2 && parts[1] == "analysis") return {200, "application/json", analysis_body_};
        if (parts.size() == 4 && parts[1] == "pair") return pair(parts[2], parts[3]);
        if (parts.size() == 4 && parts[1] == "land") return land(parts[2], parts[3]);
        return json_error(404, "no such endpoint: " + path);
    }
    return static_file(path);
}

HttpResponse BundleService::pair(const std::string& b1, const std::string& b2) const {
    const auto* stored = bundle_.score(b1, b2);
    if (!stored) return json_error(404, "no comparison for " + b1 + "/" + b2);
    const ScoreRecord rec = stored->bullet1 == b1 ? *stored : transposed(*stored);

    auto lands_of = [&](const std::string& bullet) {
        Json arr = Json::array();
        for (int l = 1; l <= kLands; ++l) {
            const auto* r = bundle_.land(bullet, l);
            if (!r || !r->signal) {
                arr.push_back(nullptr);
                continue;
            }
            const auto full = to_json(*r);
            arr.push_back({{"land_index", l}, {"signal", full.at("signal")}});
        }
        return arr;
    };
    auto j = to_json(rec);
    j["transposed"] = stored->bullet1 != b1;
    j["signals"] = {{"bullet1", lands_of(rec.bullet1)}, {"bullet2", lands_of(rec.bullet2)}};
    return ok_json(j);
}

HttpResponse BundleService::land(const std::string& bullet, const std::string& land) const {
    int index = 0;
    const auto [ptr, ec] = std::from_chars(land.data(), land.data() + land.size(), index);
    if (ec != std::errc() || ptr != land.data() + land.size() || index < 1 || index > kLands)
        return json_error(404, "no land '" + land + "'");
    const auto* r = bundle_.land(bullet, index);
    if (!r) return json_error(404, "no land " + land + " for bullet " + bullet);
    return ok_json(to_json(*r));
}

HttpResponse BundleService::static_file(const std::string& path) const {
    if (static_dir_.empty()) return json_error(404, "no static assets configured");
    std::error_code ec;
    const auto root = fs::weakly_canonical(static_dir_, ec);
    if (ec) return json_error(404, "static directory unavailable");
    std::string rel = path;
    while (!rel.empty() && rel.front() == '/') rel.erase(0, 1);
    if (rel.empty()) rel = "index.html";
    auto target = fs::weakly_canonical(root / rel, ec);
    if (ec) return json_error(404, "not found: " + path);
    const auto [root_end, t_it] = std::mismatch(root.begin(), root.end(), target.begin(), target.end());
    if (root_end != root.end()) return json_error(404, "not found: " + path);
    if (fs::is_directory(target)) target /= "index.html";
    if (!fs::is_regular_file(target)) return json_error(404, "not found: " + path);
    return {200, content_type_for(target), read_file(target.string())};
}

ServeOptions apply_env(ServeOptions opts, const std::function<const char*(const char*)>& getenv) {
    if (const char* bind = getenv("BULLETCMP_BIND"); bind && *bind) opts.bind = bind;
    if (const char* port = getenv("BULLETCMP_PORT"); port && *port) {
        int p = 0;
        const auto end = port + std::char_traits<char>::length(port);
        const auto [ptr, ec] = std::from_chars(port, end, p);
        if (ec != std::errc() || ptr != end || p < 0 || p > 65535)
            throw std::invalid_argument(std::string("BULLETCMP_PORT is not a port number: ") + port);
        opts.port = p;
    }
    return opts;
}

// ---- HTTP ---------------------------------------------------------------

struct ServiceHost::Impl {
    const BundleService& service;
    httplib::Server server;

    explicit Impl(const BundleService& s) : service(s) {
        // no SO_REUSEPORT: a second server on a busy port must fail
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
        });
        server.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto r = service.get(req.path);
            res.status = r.status;
            res.set_content(r.body, r.content_type);
        });
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            const auto r = json_error(res.status, "cannot " + req.method + " " + req.path);
            res.set_content(r.body, r.content_type);
        });
    }
};

ServiceHost::ServiceHost(const BundleService& service) : impl_(std::make_unique<Impl>(service)) {}

ServiceHost::~ServiceHost() { stop(); }

int ServiceHost::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw std::runtime_error("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + " (in use?)");
    return port;
}

void ServiceHost::serve() { impl_->server.listen_after_bind(); }

void ServiceHost::stop() {
    if (impl_) impl_->server.stop();
}

void ServiceHost::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace bulletcmp

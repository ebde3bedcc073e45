#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bulletcmp/bundle.hpp"
#include "bulletcmp/pipeline.hpp"
#include "bulletcmp/service.hpp"
#include "bulletcmp/synth.hpp"

namespace fs = std::filesystem;
using namespace bulletcmp;

namespace {

PipelineConfig config_from(const std::string& path) { return path.empty() ? PipelineConfig{} : load_config(path); }

void emit(const Json& j, const std::string& out) {
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_file(out, j);
}

int cmd_ingest(const std::string& dir, const std::string& manifest, const std::string& config_path,
               const std::string& out) {
    const auto config = config_from(config_path);
    auto entries = parse_manifest(read_file(manifest));
    Json scans = Json::array();
    int ok = 0, excluded = 0;
    for (auto& e : entries) {
        fs::path p(e.path);
        if (p.is_relative()) p = fs::path(dir) / p;
        Json s = {{"path", e.path}, {"bullet", bullet_id(e.meta)}, {"land", e.meta.land_index}};
        std::string reason = e.reason;
        bool is_excluded = e.excluded;
        if (!is_excluded) {
            const auto scan = load_scan(p.string(), e.meta);
            s["n_cols"] = scan.field.n_cols;
            s["n_rows"] = scan.field.n_rows;
            s["measured_fraction"] = scan.field.measured_fraction();
            if (auto r = validate(scan, config.validation)) {
                is_excluded = true;
                reason = *r;
            }
        }
        s["status"] = is_excluded ? "excluded" : "ok";
        s["reason"] = reason;
        (is_excluded ? excluded : ok)++;
        scans.push_back(std::move(s));
    }
    emit({{"scans", std::move(scans)}, {"counts", {{"ok", ok}, {"excluded", excluded}}}}, out);
    std::cerr << ok << " scans usable, " << excluded << " excluded\n";
    return 0;
}

int cmd_signal(const std::string& manifest, const std::string& config_path, const std::string& out) {
    const auto config = config_from(config_path);
    const auto records = extract_signals(read_manifest(manifest), config);
    write_signal_dir(out, records, config);
    const auto flags = flags_report(records);
    std::cerr << records.size() << " records written to " << out << " (" << flags["counts"]["excluded"]
              << " excluded, " << flags["counts"]["fallback_crosscut"] << " fallback crosscuts, "
              << flags["counts"]["missing_shoulder"] << " with a missing shoulder)\n";
    return 0;
}

int cmd_compare(const std::string& signals, const std::string& config_path, const std::string& out, int threads) {
    const auto config = config_from(config_path);
    const auto set = compare_records(read_signal_dir(signals), config, threads);
    write_json_file(out, scores_to_json(score_records(set)));
    std::cerr << set.pairs().size() << " comparisons of " << set.size() << " bullets written to " << out << '\n';
    return 0;
}

int cmd_analyze(const std::string& scores, const std::string& config_path, const std::string& out) {
    const auto config = config_from(config_path);
    const auto analysis = analyze_records(scores_from_json(read_json_file(scores)), config);
    write_json_file(out, to_json(analysis));
    std::cerr << analysis.ids.size() << " bullets analyzed, " << analysis.outliers.flags.size()
              << " flagged as outliers\n";
    return 0;
}

int cmd_bundle(const std::string& signals, const std::string& scores, const std::string& analysis,
               const std::string& config_path, const std::string& out) {
    std::map<std::string, double> snapshot;
    if (!config_path.empty()) {
        snapshot = load_config(config_path).snapshot();
    } else if (const auto stored = fs::path(signals) / "config.json"; fs::exists(stored)) {
        snapshot = PipelineConfig::from_snapshot(read_json_file(stored.string()).get<std::map<std::string, double>>())
                       .snapshot();
    } else {
        snapshot = PipelineConfig{}.snapshot();
    }
    const auto bundle = build_bundle(read_signal_dir(signals), scores_from_json(read_json_file(scores)),
                                     analysis_from_json(read_json_file(analysis)), std::move(snapshot));
    write_bundle(bundle, out);
    std::cerr << "bundle with " << bundle.manifest.bullets.size() << " bullets, " << bundle.scores.size()
              << " scores written to " << out << " (" << fs::file_size(out) << " bytes)\n";
    return 0;
}

int cmd_serve(const std::string& bundle_path, int port, const std::string& bind, const std::string& static_dir) {
    const auto opts = apply_env({bind, port}, [](const char* name) { return std::getenv(name); });
    const BundleService service(read_bundle(bundle_path), static_dir);
    ServiceHost host(service);
    const int bound = host.bind(opts.bind, opts.port);
    std::cerr << "serving " << bundle_path << " on http://" << opts.bind << ':' << bound << '\n';
    host.serve();
    return 0;
}

int cmd_synth(const SynthParams& params, const std::string& out) {
    const auto set = generate_synth(params);
    fs::create_directories(out);
    std::ofstream manifest(fs::path(out) / "manifest.csv");
    manifest << "path,barrel_id,shot_number,land_index,excluded,reason\n";
    for (const auto& b : set.bullets) {
        for (int l = 0; l < kLands; ++l) {
            const auto name = b.id() + "-L" + std::to_string(l + 1) + ".csv";
            std::ofstream f(fs::path(out) / name);
            f << write_grid_csv(b.lands[static_cast<std::size_t>(l)].field);
            if (!f) throw std::runtime_error("cannot write " + name);
            manifest << name << ',' << b.barrel_id << ',' << b.shot_number << ',' << l + 1 << ",0,\n";
        }
    }
    Json truth = Json::array();
    for (const auto& b : set.bullets) {
        Json lands = Json::array();
        for (const auto& l : b.lands)
            lands.push_back({{"barrel_land", l.barrel_land + 1},
                             {"offset", l.offset},
                             {"left_index", l.truth.left_index},
                             {"right_index", l.truth.right_index}});
        truth.push_back({{"bullet", b.id()}, {"phase", b.phase}, {"lands", std::move(lands)}});
    }
    write_json_file((fs::path(out) / "truth.json").string(), truth);
    std::cerr << set.bullets.size() * kLands << " scans written to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bullet land-engraved-area comparison pipeline"};
    app.require_subcommand(1);

    std::string config_path, out;

    auto* ingest = app.add_subcommand("ingest", "Load and validate the scans a manifest lists");
    std::string ingest_dir, manifest_path;
    ingest->add_option("dir", ingest_dir, "Directory the manifest paths are relative to")->required();
    ingest->add_option("--manifest", manifest_path, "Manifest CSV")->required();
    ingest->add_option("--config", config_path, "Parameter file");
    ingest->add_option("--out", out, "Report file (default: stdout)");

    auto* signal = app.add_subcommand("signal", "Extract one signal per scan");
    std::string signal_manifest;
    signal->add_option("manifest", signal_manifest, "Manifest CSV")->required();
    signal->add_option("--config", config_path, "Parameter file");
    signal->add_option("--out", out, "Output directory")->required();

    auto* compare = app.add_subcommand("compare", "Score every pair of bullets");
    std::string signals_dir;
    int threads = 0;
    compare->add_option("signals", signals_dir, "Signal directory")->required();
    compare->add_option("--config", config_path, "Parameter file");
    compare->add_option("--out", out, "Scores file")->required();
    compare->add_option("--threads", threads, "Worker threads (0 = all)");

    auto* analyze = app.add_subcommand("analyze", "Cluster, variogram and outlier flags");
    std::string scores_path;
    analyze->add_option("scores", scores_path, "Scores file")->required();
    analyze->add_option("--config", config_path, "Parameter file");
    analyze->add_option("--out", out, "Analysis file")->required();

    auto* bundle = app.add_subcommand("bundle", "Assemble the single-file data bundle");
    std::string analysis_path;
    bundle->add_option("signals", signals_dir, "Signal directory")->required();
    bundle->add_option("scores", scores_path, "Scores file")->required();
    bundle->add_option("analysis", analysis_path, "Analysis file")->required();
    bundle->add_option("--config", config_path, "Parameter file (default: the signal directory's snapshot)");
    bundle->add_option("--out", out, "Bundle file")->required();

    auto* serve = app.add_subcommand("serve", "Serve a bundle over HTTP");
    std::string bundle_path, static_dir, bind = "127.0.0.1";
    int port = 8080;
    serve->add_option("bundle", bundle_path, "Bundle file")->required();
    serve->add_option("--port", port, "Port (env BULLETCMP_PORT overrides)");
    serve->add_option("--bind", bind, "Bind address (env BULLETCMP_BIND overrides)");
    serve->add_option("--static", static_dir, "Directory of UI assets served at /");

    auto* synth = app.add_subcommand("synth", "Write a synthetic barrel set as grid CSVs plus manifest");
    SynthParams sp;
    std::string barrels = "A,B";
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--seed", sp.seed, "Random seed");
    synth->add_option("--barrels", barrels, "Comma-separated barrel ids");
    synth->add_option("--bullets", sp.bullets_per_barrel, "Bullets per barrel");
    synth->add_option("--first-shot", sp.first_shot, "Shot number of the first bullet");
    synth->add_option("--length", sp.land_length, "Land width in samples");
    synth->add_option("--rows", sp.n_rows, "Rows per scan");
    synth->add_option("--noise", sp.noise_fraction, "Noise relative to striation amplitude");
    synth->add_option("--dropout", sp.dropout_fraction, "Fraction of missing cells");
    synth->add_flag("--shoulders", sp.shoulders, "Add groove shoulders on both sides");

    app.add_subcommand("config", "Print the default parameter file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(ingest_dir, manifest_path, config_path, out);
        if (*signal) return cmd_signal(signal_manifest, config_path, out);
        if (*compare) return cmd_compare(signals_dir, config_path, out, threads);
        if (*analyze) return cmd_analyze(scores_path, config_path, out);
        if (*bundle) return cmd_bundle(signals_dir, scores_path, analysis_path, config_path, out);
        if (*serve) return cmd_serve(bundle_path, port, bind, static_dir);
        if (*synth) {
            sp.barrels.clear();
            std::stringstream ss(barrels);
            for (std::string b; std::getline(ss, b, ',');)
                if (!b.empty()) sp.barrels.push_back(b);
            return cmd_synth(sp, out);
        }
        std::cout << default_config_text();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

#include "bulletcmp/config.hpp"

#include <boost/program_options.hpp>

#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bulletcmp {

namespace po = boost::program_options;

namespace {

// One row per configuration key: how to read it from and write it into a config.
struct Field {
    const char* key;
    std::function<double(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, double)> set;
};

template <typename T, typename... Members>
Field member(const char* key, Members... path) {
    return {key,
            [=](const PipelineConfig& c) { return static_cast<double>((c .* ... .* path)); },
            [=](PipelineConfig& c, double v) { (c .* ... .* path) = static_cast<T>(v); }};
}

const std::vector<Field>& fields() {
    using C = PipelineConfig;
    static const std::vector<Field> table = {
        member<double>("validate.min_measured_fraction", &C::validation, &ValidationLimits::min_measured_fraction),
        member<std::size_t>("validate.min_cols", &C::validation, &ValidationLimits::min_cols),
        member<std::size_t>("validate.min_rows", &C::validation, &ValidationLimits::min_rows),
        member<double>("crosscut.step", &C::signal, &SignalParams::crosscut, &CrosscutParams::step),
        member<double>("crosscut.stability_threshold", &C::signal, &SignalParams::crosscut,
                       &CrosscutParams::stability_threshold),
        member<int>("crosscut.window", &C::signal, &SignalParams::crosscut, &CrosscutParams::window),
        member<double>("crosscut.min_row_fraction", &C::signal, &SignalParams::crosscut,
                       &CrosscutParams::min_row_fraction),
        member<int>("profile.band_halfwidth", &C::signal, &SignalParams::band_halfwidth),
        member<double>("grooves.shoulder_quantile", &C::signal, &SignalParams::grooves,
                       &GrooveParams::shoulder_quantile),
        member<double>("grooves.edge_fraction", &C::signal, &SignalParams::grooves, &GrooveParams::edge_fraction),
        member<double>("grooves.shoulder_margin", &C::signal, &SignalParams::grooves, &GrooveParams::shoulder_margin),
        member<std::size_t>("grooves.min_samples", &C::signal, &SignalParams::grooves, &GrooveParams::min_samples),
        member<double>("loess.span", &C::signal, &SignalParams::loess, &LoessParams::span),
        member<int>("loess.degree", &C::signal, &SignalParams::loess, &LoessParams::degree),
        member<int>("loess.robust_iterations", &C::signal, &SignalParams::loess, &LoessParams::robust_iterations),
        member<int>("compare.max_lag", &C::compare, &CompareParams::lag, &LagSearchParams::max_lag),
        {"compare.min_overlap",
         [](const C& c) { return static_cast<double>(c.compare.lag.min_overlap.value_or(0)); },
         [](C& c, double v) {
             if (v > 0)
                 c.compare.lag.min_overlap = static_cast<std::size_t>(v);
             else
                 c.compare.lag.min_overlap.reset();
         }},
        member<std::size_t>("compare.min_overlap_floor", &C::compare, &CompareParams::lag,
                            &LagSearchParams::min_overlap_floor),
        member<int>("compare.min_in_phase", &C::compare, &CompareParams::min_in_phase),
        member<double>("analyze.trend_span", &C::analysis, &AnalysisParams::trend, &LoessParams::span),
        member<int>("analyze.trend_degree", &C::analysis, &AnalysisParams::trend, &LoessParams::degree),
        member<int>("analyze.trend_robust_iterations", &C::analysis, &AnalysisParams::trend,
                    &LoessParams::robust_iterations),
        member<double>("analyze.outlier_quantile", &C::analysis, &AnalysisParams::outlier_quantile),
        member<int>("bundle.thumbnail_factor", &C::thumbnail_factor),
    };
    return table;
}

void check(const PipelineConfig& c) {
    c.signal.loess.check();
    c.analysis.trend.check();
    if (c.compare.lag.max_lag < 0) throw std::invalid_argument("compare.max_lag must be >= 0");
    if (c.thumbnail_factor < 1) throw std::invalid_argument("bundle.thumbnail_factor must be >= 1");
    if (!(c.signal.grooves.edge_fraction > 0 && c.signal.grooves.edge_fraction < 0.5))
        throw std::invalid_argument("grooves.edge_fraction must lie in (0, 0.5)");
}

}  // namespace

std::map<std::string, double> PipelineConfig::snapshot() const {
    std::map<std::string, double> out;
    for (const auto& f : fields()) out[f.key] = f.get(*this);
    return out;
}

PipelineConfig PipelineConfig::from_snapshot(const std::map<std::string, double>& values) {
    PipelineConfig c;
    for (const auto& f : fields()) {
        auto it = values.find(f.key);
        if (it != values.end()) f.set(c, it->second);
    }
    check(c);
    return c;
}

PipelineConfig parse_config(const std::string& text) {
    po::options_description desc;
    for (const auto& f : fields()) desc.add_options()(f.key, po::value<double>());
    po::variables_map vm;
    std::istringstream in(text);
    try {
        po::store(po::parse_config_file(in, desc, /*allow_unregistered=*/false), vm);
    } catch (const po::error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    for (const auto& f : fields())
        if (vm.count(f.key)) f.set(c, vm[f.key].as<double>());
    check(c);
    return c;
}

PipelineConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string default_config_text() {
    std::ostringstream out;
    std::string section;
    for (const auto& [key, value] : PipelineConfig{}.snapshot()) {
        const std::string k(key);
        const auto dot = k.find('.');
        if (k.substr(0, dot) != section) {
            section = k.substr(0, dot);
            out << (out.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
        }
        out << k.substr(dot + 1) << " = " << value << '\n';
    }
    return out.str();
}

}  // namespace bulletcmp

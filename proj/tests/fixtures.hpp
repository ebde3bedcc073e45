// Signal fixtures built with the library itself (synthetic generator plus the
// signal pipeline). Oracles live in support.hpp.
#pragma once

#include <memory>
#include <random>
#include <vector>

#include "bulletcmp/compare.hpp"
#include "bulletcmp/signal.hpp"
#include "bulletcmp/synth.hpp"

namespace fixture {

inline std::shared_ptr<const bulletcmp::Signal> make_signal(std::vector<double> values,
                                                            std::vector<std::uint8_t> mask = {}) {
    auto s = std::make_shared<bulletcmp::Signal>();
    if (mask.empty()) mask.assign(values.size(), 1);
    s->values = std::move(values);
    s->mask = std::move(mask);
    return s;
}

inline std::vector<double> red_noise(std::mt19937_64& rng, std::size_t n, double rho = 0.6) {
    std::normal_distribution<double> z(0, 1);
    std::vector<double> v(n);
    double w = 0;
    for (auto& x : v) {
        w = rho * w + z(rng);
        x = w;
    }
    return v;
}

inline bulletcmp::BulletSignals random_bullet(std::mt19937_64& rng, const std::string& id, std::size_t n) {
    bulletcmp::BulletSignals b;
    b.id = id;
    b.barrel_id = id.substr(0, 1);
    b.shot_number = std::stoi(id.substr(1));
    for (auto& l : b.lands) l = make_signal(red_noise(rng, n));
    return b;
}

inline bulletcmp::BulletSignals to_signals(const bulletcmp::SynthBullet& sb, const bulletcmp::SignalParams& params = {}) {
    bulletcmp::BulletSignals b;
    b.id = sb.id();
    b.barrel_id = sb.barrel_id;
    b.shot_number = sb.shot_number;
    for (int l = 0; l < bulletcmp::kLands; ++l)
        b.lands[static_cast<std::size_t>(l)] =
            std::make_shared<bulletcmp::Signal>(bulletcmp::process_scan(bulletcmp::to_scan_record(sb, l), params).signal);
    return b;
}

inline std::vector<bulletcmp::BulletSignals> to_signals(const bulletcmp::SynthSet& set,
                                                        const bulletcmp::SignalParams& params = {}) {
    std::vector<bulletcmp::BulletSignals> out;
    for (const auto& b : set.bullets) out.push_back(to_signals(b, params));
    return out;
}

}  // namespace fixture

#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "bulletcmp/compare.hpp"

using namespace bulletcmp;

namespace {

Signal striated(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z(0, 1);
    Signal s;
    s.values.resize(n);
    s.mask.assign(n, 1);
    double w = 0;
    for (auto& v : s.values) v = w = 0.6 * w + z(rng);
    return s;
}

void lag_search(benchmark::State& state, bool serial) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = striated(rng, n), y = striated(rng, n);
    LagSearchParams p;
    p.max_lag = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(serial ? ccf_max_serial(x, y, p) : ccf_max(x, y, p));
}

void BM_ccf_max(benchmark::State& s) { lag_search(s, false); }
void BM_ccf_max_serial(benchmark::State& s) { lag_search(s, true); }

void BM_compare_set(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::vector<BulletSignals> bullets;
    for (int b = 0; b < 6; ++b) {
        BulletSignals bs;
        bs.id = "A" + std::to_string(b + 1);
        bs.barrel_id = "A";
        bs.shot_number = b + 1;
        for (auto& l : bs.lands) l = std::make_shared<Signal>(striated(rng, 1000));
        bullets.push_back(bs);
    }
    CompareParams p;
    p.lag.max_lag = 200;
    for (auto _ : state) benchmark::DoNotOptimize(compare_set(bullets, p, static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_ccf_max)->Args({2000, 100})->Args({2000, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ccf_max_serial)->Args({2000, 100})->Args({2000, 500})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_compare_set)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

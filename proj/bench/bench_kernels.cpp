#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tubekit/data.hpp"
#include "tubekit/serial.hpp"

using namespace tubekit;

namespace {

BBox random_box(std::mt19937& rng, double extent) {
    std::uniform_real_distribution<double> pos(0, extent), side(10, 120);
    const double x = pos(rng), y = pos(rng);
    return {x, y, x + side(rng), y + side(rng)};
}

std::vector<ScoredTube> scene(int n, int frames, unsigned seed = 1) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> tm(8, frames - 8), len(1, 8);
    std::uniform_real_distribution<double> score(0, 1), drift(-15, 15);
    std::vector<ScoredTube> out;
    for (int i = 0; i < n; ++i) {
        BTube t;
        t.bm = random_box(rng, 600);
        const double dx = drift(rng), dy = drift(rng);
        t.bs = {t.bm.x1 - dx, t.bm.y1 - dy, t.bm.x2 - dx, t.bm.y2 - dy};
        t.be = {t.bm.x1 + dx, t.bm.y1 + dy, t.bm.x2 + dx, t.bm.y2 + dy};
        t.tm = tm(rng);
        t.ts = t.tm - len(rng);
        t.te = t.tm + len(rng);
        out.push_back({t, score(rng)});
    }
    return out;
}

std::vector<BTube> plain(const std::vector<ScoredTube>& s) {
    std::vector<BTube> out;
    for (const auto& t : s) out.push_back(t.tube);
    return out;
}

std::vector<Track> tracks(int n) {
    SynthSpec spec;
    spec.n_targets = 6;
    spec.n_frames = 60;
    std::vector<Track> out;
    for (int k = 0; out.size() < static_cast<std::size_t>(n); ++k) {
        spec.seed = k;
        for (auto& t : synth_tracks(spec)) {
            t.id = static_cast<TrackId>(out.size()) + 1;
            out.push_back(std::move(t));
        }
    }
    out.resize(n);
    return out;
}

EncodeParams clip() {
    EncodeParams p;
    p.clip_start = 0;
    p.clip_len = 16;
    p.image_h = 512;
    p.image_w = 768;
    return p;
}

template <auto Fn>
void pairwise(benchmark::State& state) {
    const auto tubes = plain(scene(static_cast<int>(state.range(0)), 60));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(tubes, tubes));
}

template <auto Fn>
void nms(benchmark::State& state) {
    const auto tubes = scene(static_cast<int>(state.range(0)), 20);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(tubes, 0.5, 0.4));
}

template <auto Fn>
void scores(benchmark::State& state) {
    const auto t = tracks(static_cast<int>(state.range(0)));
    const auto tubes = plain(scene(static_cast<int>(state.range(0)), 60));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(t, tubes, 0.2));
}

template <auto Fn>
void encode(benchmark::State& state) {
    const auto tubes = plain(scene(static_cast<int>(state.range(0)), 16));
    const auto params = clip();
    for (auto _ : state) benchmark::DoNotOptimize(Fn(tubes, params));
}

template <auto Fn>
void loss(benchmark::State& state) {
    const auto target = encode_targets(plain(scene(static_cast<int>(state.range(0)), 16)), clip());
    TargetMaps pred = target;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> prob(0.01, 0.99), noise(-2, 2);
    for (auto& level : pred.levels) {
        for (auto& c : level.confidence) c = prob(rng);
        for (auto& c : level.centerness) c = prob(rng);
        for (auto& r : level.regression) {
            auto v = r.to_array();
            for (auto& x : v) x += noise(rng);
            r = RegressionTarget::from_array(v);
        }
    }
    for (auto _ : state) benchmark::DoNotOptimize(Fn(pred, target, LossWeights{}));
}

}  // namespace

BENCHMARK(pairwise<serial::pairwise_tube_iou>)->Name("pairwise_tube_iou/serial")->Arg(400)->UseRealTime();
BENCHMARK(pairwise<pairwise_tube_iou>)->Name("pairwise_tube_iou/omp")->Arg(400)->UseRealTime();
BENCHMARK(nms<serial::tube_nms>)->Name("tube_nms/serial")->Arg(4000)->UseRealTime();
BENCHMARK(nms<tube_nms>)->Name("tube_nms/omp")->Arg(4000)->UseRealTime();
BENCHMARK(scores<serial::score_matrix>)->Name("score_matrix/serial")->Arg(300)->UseRealTime();
BENCHMARK(scores<score_matrix>)->Name("score_matrix/omp")->Arg(300)->UseRealTime();
BENCHMARK(encode<serial::encode_targets>)->Name("encode_targets/serial")->Arg(200)->UseRealTime();
BENCHMARK(encode<encode_targets>)->Name("encode_targets/omp")->Arg(200)->UseRealTime();
BENCHMARK(loss<serial::total_loss>)->Name("total_loss/serial")->Arg(200)->UseRealTime();
BENCHMARK(loss<total_loss>)->Name("total_loss/omp")->Arg(200)->UseRealTime();

BENCHMARK_MAIN();

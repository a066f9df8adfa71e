#include <flarekit/image.hpp>
#include <flarekit/optics.hpp>
#include <flarekit/quality.hpp>
#include <flarekit/removal.hpp>
#include <flarekit/scene.hpp>
#include <flarekit/synthesis.hpp>

#include <benchmark/benchmark.h>

using namespace flarekit;

namespace {

Image noise_image(int size) {
    Image img(size, size, Domain::encoded(2.2));
    Rng rng(1);
    for (float& v : img.samples()) v = static_cast<float>(rng.uniform());
    return img;
}

BracketPair square_pair(int size) {
    SceneConfig sc;
    sc.width = sc.height = size;
    Rng rng(7);
    return make_bracket_pair(render_scene(sc, rng));
}

SynthesisConfig square_config(int size) {
    SynthesisConfig cfg;
    cfg.resize_width = cfg.resize_height = cfg.crop = size;
    return cfg;
}

} // namespace

static void BM_GaussianBlur(benchmark::State& state) {
    const Image img = noise_image(512);
    const double sigma = static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, sigma));
}
BENCHMARK(BM_GaussianBlur)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_Rotate180(benchmark::State& state) {
    const Image img = noise_image(512);
    for (auto _ : state) benchmark::DoNotOptimize(rotate180_about(img, {255.2, 255.7}));
}
BENCHMARK(BM_Rotate180)->Unit(benchmark::kMillisecond);

static void BM_GhostRatio(benchmark::State& state) {
    const auto lens = optics::load_prescription(FLAREKIT_BENCH_LENS);
    for (auto _ : state) benchmark::DoNotOptimize(optics::ghost_ratio(lens, *lens.ghost));
}
BENCHMARK(BM_GhostRatio);

static void BM_SynthesizeTriplet(benchmark::State& state) {
    const SynthesisConfig cfg = square_config(512);
    const PreparedPair pair = prepare_pair(square_pair(512), cfg);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(synthesize_triplet(pair, cfg, seed++));
}
BENCHMARK(BM_SynthesizeTriplet)->Unit(benchmark::kMillisecond);

static void BM_RemoveFlare(benchmark::State& state) {
    const SynthesisConfig cfg = square_config(512);
    const FlareTriplet t = synthesize_triplet(square_pair(512), cfg, 3);
    for (auto _ : state) benchmark::DoNotOptimize(remove_flare(t.corrupted, t.center()));
}
BENCHMARK(BM_RemoveFlare)->Unit(benchmark::kMillisecond);

static void BM_Ssim(benchmark::State& state) {
    const Image a = noise_image(512);
    const Image b = gaussian_blur(a, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

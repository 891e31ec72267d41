#include <benchmark/benchmark.h>

#include <random>

#include "phantoms.hpp"
#include "synthkit/generator.hpp"
#include "synthkit/volume_ops.hpp"
#include "synthkit/volumetry.hpp"

using namespace synthkit;

namespace {

Image noise_image(int n) {
  Image im({n, n, n}, {1, 1, 1});
  std::mt19937 gen(1);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (auto& v : im.storage()) v = u(gen);
  return im;
}

void BM_GaussianBlur(benchmark::State& state) {
  const Image im = noise_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(im, {2.0, 2.0, 2.0}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(im.size()));
}
BENCHMARK(BM_GaussianBlur)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RandomWarp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LabelMap head = test::head_phantom(n);
  Rng rng(2);
  for (auto _ : state) {
    const SpatialTransform t = sample_transform(GenerationPriors::generative(), head.dims(), rng);
    benchmark::DoNotOptimize(warp(head, t.affine, t.displacement));
  }
}
BENCHMARK(BM_RandomWarp)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_GeneratePairS1(benchmark::State& state) {
  const LabelMap head = test::head_phantom(static_cast<int>(state.range(0)));
  const LabelTaxonomy tax = LabelTaxonomy::default_taxonomy();
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(generate_pair_s1(head, tax, GenerationPriors::generative(), rng));
}
BENCHMARK(BM_GeneratePairS1)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_FitAgeing(benchmark::State& state) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> age(20, 90), sp(0.8, 1.6);
  std::normal_distribution<double> eps(0, 1);
  std::vector<VolumeSample> samples;
  for (int i = 0; i < state.range(0); ++i) {
    VolumeSample s;
    s.age = i == 0 ? 20 : i == 1 ? 90 : age(gen);
    s.gender = i % 2;
    s.spacing = {sp(gen), sp(gen), sp(gen)};
    s.volume = 8000 - 30 * s.age + 200 * s.spacing[0] + 150 * s.gender + 100 * eps(gen);
    samples.push_back(s);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_ageing(samples, 1e3, Direction::decreasing));
}
BENCHMARK(BM_FitAgeing)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

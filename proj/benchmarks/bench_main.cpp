#include <benchmark/benchmark.h>

#include <filesystem>

#include "asc/audio.hpp"
#include "asc/clustering.hpp"
#include "asc/cqt.hpp"
#include "asc/patches.hpp"
#include "asc/random.hpp"
#include "asc/reference_model.hpp"
#include "asc/simulation.hpp"
#include "asc/voting.hpp"

namespace {

void BM_CqtKernelBuild(benchmark::State& state) {
  const double fs = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(asc::dsp::CqtKernel(fs, {}));
}
BENCHMARK(BM_CqtKernelBuild)->Arg(8000)->Arg(22050)->Unit(benchmark::kMillisecond);

void BM_CqtTransform(benchmark::State& state) {
  const double fs = static_cast<double>(state.range(0));
  const asc::dsp::CqtKernel kernel(fs, {});
  const auto x = asc::dsp::synthesize({{220.0, 440.0}, 0.3, 0.05}, fs, 1.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernel.transform(x));
  state.SetLabel("1 s of audio");
}
BENCHMARK(BM_CqtTransform)->Arg(8000)->Arg(22050)->Unit(benchmark::kMillisecond);

void BM_ResizeAndPatch(benchmark::State& state) {
  asc::dsp::Spectrogram s;
  s.values = Eigen::MatrixXd::Random(143, 901);
  for (auto _ : state) benchmark::DoNotOptimize(asc::dsp::extract_patches(asc::dsp::resize_spectrogram(s)));
}
BENCHMARK(BM_ResizeAndPatch)->Unit(benchmark::kMicrosecond);

void BM_SpectralCluster(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  asc::Rng rng(3);
  asc::cluster::ConfusionMatrix m;
  m.counts.resize(n, n);
  for (Eigen::Index i = 0; i < m.counts.size(); ++i) m.counts.data()[i] = std::floor(rng.uniform(0.0, 10.0));
  const auto aff = asc::cluster::build_affinity(m, 2);
  for (auto _ : state) benchmark::DoNotOptimize(asc::cluster::spectral_cluster(aff, 3, 1));
}
BENCHMARK(BM_SpectralCluster)->Arg(15)->Arg(19)->Arg(60)->Unit(benchmark::kMicrosecond);

void BM_VoteDataset(benchmark::State& state) {
  asc::harness::SimSpec spec;
  spec.segment_count = static_cast<int>(state.range(0));
  spec.p_super = {0.95};
  const auto d = asc::harness::simulate_classifiers(spec);
  for (auto _ : state) benchmark::DoNotOptimize(asc::vote::vote_dataset(d.base, d.supers, d.partition, {}));
  state.SetItemsProcessed(state.iterations() * spec.segment_count);
}
BENCHMARK(BM_VoteDataset)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const int samples = static_cast<int>(state.range(0));
  asc::Rng rng(5);
  asc::model::LabeledFeatures data;
  data.features.resize(samples, 64);
  for (Eigen::Index i = 0; i < data.features.size(); ++i) data.features.data()[i] = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < samples; ++i) data.labels.push_back(i % 15);
  asc::model::TrainConfig cfg;
  cfg.max_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(asc::model::train(data, 15, cfg));
  state.SetItemsProcessed(state.iterations() * samples);
}
BENCHMARK(BM_TrainEpoch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

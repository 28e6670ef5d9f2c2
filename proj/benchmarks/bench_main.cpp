#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fsjump/annotation.hpp"
#include "fsjump/baseline.hpp"
#include "fsjump/metrics.hpp"
#include "fsjump/preprocess.hpp"
#include "fsjump/synthetic.hpp"

namespace {

using namespace fsjump;

// Alternating jump segments of random length covering roughly [0, 12 n).
std::vector<Segment> jumps(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> len(4, 10), gap(0, 4), type(0, 5);
  std::vector<Segment> out;
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = t + gap(rng);
    const std::size_t end = start + len(rng);
    out.push_back({Label::set_jump(kAllJumpTypes[type(rng)]), start, end});
    t = end;
  }
  return out;
}

void BM_F1AtK(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pred = jumps(rng, n);
  const auto gt = jumps(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(f1_at_k(pred, gt, 50.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_F1AtK)->RangeMultiplier(4)->Range(16, 1024);

const SyntheticSequence& sample_sequence() {
  static const SyntheticSequence seq = [] {
    SyntheticConfig config;
    std::mt19937_64 rng(config.seed);
    return generate_synthetic_sequence(config, rng, "bench", "comp0");
  }();
  return seq;
}

void BM_AlignPerFrame(benchmark::State& state) {
  const auto centered = center_root(sample_sequence().pose);
  for (auto _ : state) benchmark::DoNotOptimize(align_pose_sequence(centered));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(centered.frame_count));
}
BENCHMARK(BM_AlignPerFrame)->Unit(benchmark::kMicrosecond);

void BM_PreprocessSequence(benchmark::State& state) {
  const auto& pose = sample_sequence().pose;
  for (auto _ : state) benchmark::DoNotOptimize(preprocess_sequence(pose));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pose.frame_count));
}
BENCHMARK(BM_PreprocessSequence)->Unit(benchmark::kMicrosecond);

// One mini-batch loss and gradient evaluation on windowed features.
void BM_TrainingStep(benchmark::State& state) {
  const auto& seq = sample_sequence();
  const auto features = preprocess_sequence(seq.pose);
  RowMatrix x = window_features(features, 15);
  Standardizer::fit(x).apply(x);
  const auto batch = std::min<Eigen::Index>(state.range(0), x.rows());
  const RowMatrix rows = x.topRows(batch);
  const auto labels = expand_to_frames(project_annotation_to_set(seq.annotation)).labels;
  const std::vector<LabelId> y(labels.begin(), labels.begin() + batch);
  const std::size_t classes = default_taxonomy(Level::Set).size();
  const auto w = balanced_class_weights(y, classes);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 0.01);
  Eigen::MatrixXd weights(static_cast<Eigen::Index>(classes), x.cols() + 1);
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(weights, rows, y, w, 1e-4));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainingStep)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_SmoothLabels(benchmark::State& state) {
  const auto frames = expand_to_frames(project_annotation_to_set(sample_sequence().annotation));
  for (auto _ : state) benchmark::DoNotOptimize(smooth_labels(frames));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.labels.size()));
}
BENCHMARK(BM_SmoothLabels)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();

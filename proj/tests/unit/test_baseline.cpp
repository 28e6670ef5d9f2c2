#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "fsjump/baseline.hpp"
#include "fsjump/error.hpp"
#include "test_support.hpp"

namespace fsjump {
namespace {

using testing::TempDir;

FeatureSequence ramp(std::size_t frames, std::size_t dims) {
  FeatureSequence f;
  f.frame_count = frames;
  f.dims = dims;
  f.fps = 30.0;
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t d = 0; d < dims; ++d) f.values.push_back(10.0 * t + d);
  return f;
}

TEST(Window, ClampsAtSequenceEdges) {
  const auto x = window_features(ramp(4, 2), 3);
  ASSERT_EQ(x.rows(), 4);
  ASSERT_EQ(x.cols(), 6);
  const std::vector<double> first{0, 1, 0, 1, 10, 11};
  const std::vector<double> last{20, 21, 30, 31, 30, 31};
  for (int c = 0; c < 6; ++c) {
    EXPECT_EQ(x(0, c), first[c]);
    EXPECT_EQ(x(3, c), last[c]);
  }
}

TEST(Window, RejectsEvenWidth) {
  EXPECT_THROW(window_features(ramp(4, 2), 4), RangeError);
  EXPECT_THROW(window_features(ramp(4, 2), 0), RangeError);
}

TEST(Standardizer, ConstantColumnsKeepUnitScale) {
  RowMatrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const auto s = Standardizer::fit(x);
  EXPECT_DOUBLE_EQ(s.mean(0), 2.0);
  EXPECT_EQ(s.stddev(1), 1.0);
  s.apply(x);
  EXPECT_EQ(x(0, 1), 0.0);
  EXPECT_NEAR(x.col(0).squaredNorm() / 3.0, 1.0, 1e-12);
}

TEST(ClassWeights, BalancedAndZeroForAbsentClasses) {
  const std::vector<LabelId> y{0, 0, 0, 1};
  const auto w = balanced_class_weights(y, 3);
  EXPECT_DOUBLE_EQ(w[0], 4.0 / (3.0 * 3.0));
  EXPECT_DOUBLE_EQ(w[1], 4.0 / 3.0);
  EXPECT_EQ(w[2], 0.0);
}

struct Problem {
  RowMatrix x;
  std::vector<LabelId> y;
  std::vector<double> w;
};

Problem random_problem(std::mt19937_64& rng, Eigen::Index n, Eigen::Index f, std::size_t c) {
  Problem p;
  p.x.resize(n, f);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < f; ++k) p.x(i, k) = testing::uniform(rng, -2, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    p.y.push_back(static_cast<LabelId>(testing::uniform_index(rng, 0, c - 1)));
  for (std::size_t k = 0; k < c; ++k) p.w.push_back(testing::uniform(rng, 0.2, 2.0));
  return p;
}

TEST(Loss, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_problem(rng, 20, 4, 3);
    Eigen::MatrixXd w(3, 5);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = testing::uniform(rng, -1, 1);
    const double l2 = 0.05;
    const auto analytic = loss_and_gradient(w, p.x, p.y, p.w, l2).gradient;
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Eigen::MatrixXd plus = w, minus = w;
      plus(i) += h;
      minus(i) -= h;
      const double fd = (loss_and_gradient(plus, p.x, p.y, p.w, l2).loss -
                         loss_and_gradient(minus, p.x, p.y, p.w, l2).loss) / (2 * h);
      EXPECT_NEAR(analytic(i), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Loss, ZeroWeightsGiveLogC) {
  std::mt19937_64 rng(42);
  const auto p = random_problem(rng, 30, 3, 14);
  const auto r = loss_and_gradient(Eigen::MatrixXd::Zero(14, 4), p.x, p.y, p.w, 1.0);
  EXPECT_NEAR(r.loss, std::log(14.0), 1e-12);
}

TEST(Loss, BiasIsNotRegularized) {
  RowMatrix x = RowMatrix::Zero(2, 1);
  const std::vector<LabelId> y{0, 1};
  const std::vector<double> cw{1.0, 1.0};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 1) = 3.0;  // bias column
  const auto with_l2 = loss_and_gradient(w, x, y, cw, 10.0);
  const auto without = loss_and_gradient(w, x, y, cw, 0.0);
  EXPECT_DOUBLE_EQ(with_l2.loss, without.loss);
}

// Two well-separated classes along the first feature.
void toy_corpus(std::vector<FeatureSequence>& feats, std::vector<FrameLabels>& labels) {
  FeatureSequence f;
  f.dims = 2;
  f.fps = 30;
  f.sequence_id = "toy";
  FrameLabels l{Level::Set, {}};
  for (std::size_t t = 0; t < 60; ++t) {
    const bool action = (t / 10) % 2 == 1;
    f.values.push_back(action ? 1.0 : -1.0);
    f.values.push_back(std::sin(static_cast<double>(t)));
    l.labels.push_back(action ? 7 : 0);
  }
  f.frame_count = 60;
  feats.push_back(f);
  labels.push_back(l);
}

TEST(Train, LearnsSeparableProblemWithMonotoneLoss) {
  std::vector<FeatureSequence> feats;
  std::vector<FrameLabels> labels;
  toy_corpus(feats, labels);
  TrainConfig config;
  config.epochs = 30;
  const auto model = train(feats, labels, default_taxonomy(Level::Set), 1, config);
  EXPECT_NEAR(model.loss_history.front(), std::log(14.0), 1e-9);
  for (std::size_t i = 1; i < model.loss_history.size(); ++i)
    EXPECT_LE(model.loss_history[i], model.loss_history[i - 1]);
  const auto pred = predict_frames(model, feats[0]);
  EXPECT_EQ(pred.labels.labels, labels[0].labels);
}

TEST(Train, DeterministicAndIndependentOfSequenceOrder) {
  std::vector<FeatureSequence> feats;
  std::vector<FrameLabels> labels;
  toy_corpus(feats, labels);
  auto f2 = feats[0];
  auto l2 = labels[0];
  std::reverse(l2.labels.begin(), l2.labels.end());
  for (std::size_t t = 0; t < 30; ++t)
    for (std::size_t d = 0; d < 2; ++d)
      std::swap(f2.values[t * 2 + d], f2.values[(59 - t) * 2 + d]);
  TrainConfig config;
  config.epochs = 5;
  config.batch_size = 16;
  const auto& tax = default_taxonomy(Level::Set);
  const auto a = train({feats[0], f2}, {labels[0], l2}, tax, 1, config);
  const auto b = train({feats[0], f2}, {labels[0], l2}, tax, 1, config);
  const auto c = train({f2, feats[0]}, {l2, labels[0]}, tax, 1, config);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.weights, c.weights);
}

TEST(Train, RejectsDegenerateInputs) {
  std::vector<FeatureSequence> feats;
  std::vector<FrameLabels> labels;
  toy_corpus(feats, labels);
  const auto& tax = default_taxonomy(Level::Set);
  auto one_class = labels;
  std::fill(one_class[0].labels.begin(), one_class[0].labels.end(), 0);
  EXPECT_THROW(train(feats, one_class, tax, 1, {}), TrainingError);
  auto short_labels = labels;
  short_labels[0].labels.pop_back();
  EXPECT_THROW(train(feats, short_labels, tax, 1, {}), DimensionError);
  EXPECT_THROW(train(feats, labels, default_taxonomy(Level::Element), 1, {}), DimensionError);
}

TEST(Model, SaveLoadRoundTripIsExact) {
  TempDir dir;
  std::vector<FeatureSequence> feats;
  std::vector<FrameLabels> labels;
  toy_corpus(feats, labels);
  TrainConfig config;
  config.epochs = 3;
  const auto model = train(feats, labels, default_taxonomy(Level::Set), 3, config);
  model.save(dir / "m.fslm");
  const auto back = LinearSegmenterModel::load(dir / "m.fslm");
  EXPECT_EQ(back.weights, model.weights);
  EXPECT_EQ(back.standardizer.mean, model.standardizer.mean);
  EXPECT_EQ(back.standardizer.stddev, model.standardizer.stddev);
  EXPECT_EQ(back.window, 3u);
  EXPECT_EQ(back.taxonomy, model.taxonomy);
  EXPECT_EQ(back.loss_history, model.loss_history);
  EXPECT_EQ(predict_frames(back, feats[0]).labels.labels,
            predict_frames(model, feats[0]).labels.labels);
}

TEST(Model, LoadRejectsForeignFiles) {
  TempDir dir;
  std::ofstream(dir / "x.fslm") << "not a model";
  EXPECT_THROW(LinearSegmenterModel::load(dir / "x.fslm"), ParseError);
}

TEST(Predict, TiesGoToLowerId) {
  LinearSegmenterModel model;
  model.window = 1;
  model.feature_dims = 1;
  model.weights = Eigen::MatrixXd::Zero(14, 2);
  model.standardizer = Standardizer::identity(1);
  RowMatrix x = RowMatrix::Zero(2, 1);
  EXPECT_EQ(predict_frames(model, x).labels.labels, (std::vector<LabelId>{0, 0}));
  model.weights(5, 1) = 1.0;
  model.weights(3, 1) = 1.0;
  EXPECT_EQ(predict_frames(model, x).labels.labels, (std::vector<LabelId>{3, 3}));
}

TEST(Smooth, RemovesFlickerAndShortRuns) {
  FrameLabels f{Level::Set, {0, 0, 0, 0, 0, 7, 0, 0, 0, 0, 7, 7, 7, 7, 7, 7, 7, 2, 7, 7}};
  const auto s = smooth_labels(f, {3, 3});
  const std::vector<LabelId> expected{0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                      7, 7, 7, 7, 7, 7, 7, 7, 7, 7};
  EXPECT_EQ(s.labels, expected);
}

TEST(Smooth, ShortRunJoinsLongerNeighbour) {
  FrameLabels f{Level::Set, {1, 1, 1, 1, 2, 2, 3, 3, 3, 3, 3, 3}};
  const auto s = smooth_labels(f, {1, 3});
  EXPECT_EQ(s.labels, (std::vector<LabelId>{1, 1, 1, 1, 3, 3, 3, 3, 3, 3, 3, 3}));
}

TEST(Smooth, IdempotentAndRunsRespectMinimum) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 300; ++i) {
    FrameLabels f{Level::Set, {}};
    const std::size_t T = testing::uniform_index(rng, 1, 80);
    while (f.labels.size() < T) {
      const auto label = static_cast<LabelId>(testing::uniform_index(rng, 0, 4));
      const std::size_t len = testing::uniform_index(rng, 1, 8);
      for (std::size_t k = 0; k < len && f.labels.size() < T; ++k) f.labels.push_back(label);
    }
    const SmoothOptions opt{testing::uniform_index(rng, 0, 4) * 2 + 1,
                            testing::uniform_index(rng, 1, 6)};
    const auto once = smooth_labels(f, opt);
    ASSERT_EQ(once.labels.size(), T);
    if (opt.min_segment >= (opt.mode_window + 1) / 2) {
      EXPECT_EQ(smooth_labels(once, opt).labels, once.labels);
    }
    if (T >= opt.min_segment) {
      std::size_t run = 1;
      for (std::size_t t = 1; t <= T; ++t) {
        if (t < T && once.labels[t] == once.labels[t - 1]) {
          ++run;
          continue;
        }
        EXPECT_GE(run, opt.min_segment);
        run = 1;
      }
    }
  }
}

}  // namespace
}  // namespace fsjump

#include <gtest/gtest.h>

#include "fsjump/error.hpp"
#include "fsjump/metrics.hpp"
#include "test_support.hpp"

namespace fsjump {
namespace {

Segment axel(std::size_t start, std::size_t end) {
  return {Label::set_jump(JumpType::Axel), start, end};
}
Segment lutz(std::size_t start, std::size_t end) {
  return {Label::set_jump(JumpType::Lutz), start, end};
}

TEST(Iou, OneFrameShiftOfSixteenFrameJump) {
  // Average jump length 16 frames shifted by one: 15 / 17.
  EXPECT_DOUBLE_EQ(iou(axel(0, 16), axel(1, 17)), 15.0 / 17.0);
  const std::vector<Segment> p{axel(1, 17)}, g{axel(0, 16)};
  EXPECT_EQ(match_segments(p, g, 75).tp, 1u);
  EXPECT_EQ(match_segments(p, g, 90).tp, 0u);
}

TEST(Iou, DisjointIsZero) { EXPECT_EQ(iou(axel(0, 5), axel(5, 9)), 0.0); }

TEST(Iou, MatchesFrameCountingOracle) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 500; ++i) {
    const std::size_t a0 = testing::uniform_index(rng, 0, 30);
    const std::size_t b0 = testing::uniform_index(rng, 0, 30);
    const Segment a = axel(a0, a0 + testing::uniform_index(rng, 1, 20));
    const Segment b = axel(b0, b0 + testing::uniform_index(rng, 1, 20));
    const auto f = testing::frame_iou(a, b);
    EXPECT_DOUBLE_EQ(iou(a, b), static_cast<double>(f.inter) / static_cast<double>(f.uni));
  }
}

TEST(F1, ThresholdIsInclusive) {
  // IoU exactly 1/2.
  const std::vector<Segment> p{axel(0, 10)}, g{axel(0, 20)};
  EXPECT_EQ(match_segments(p, g, 50).tp, 1u);
  EXPECT_EQ(match_segments(p, g, 50.0001).tp, 0u);
}

TEST(F1, LabelsMustAgree) {
  const std::vector<Segment> p{lutz(0, 10)}, g{axel(0, 10)};
  const auto c = match_segments(p, g, 10);
  EXPECT_EQ(c, (SegmentCounts{0, 1, 1}));
}

TEST(F1, EachGroundTruthMatchedOnce) {
  const std::vector<Segment> p{axel(0, 5), axel(5, 10)}, g{axel(0, 10)};
  const auto c = match_segments(p, g, 10);
  EXPECT_EQ(c, (SegmentCounts{1, 1, 0}));
  const auto s = score_counts(c);
  EXPECT_DOUBLE_EQ(s.precision, 50.0);
  EXPECT_DOUBLE_EQ(s.recall, 100.0);
  EXPECT_DOUBLE_EQ(s.f1, 200.0 / 3.0);
}

TEST(F1, TiesGoToEarlierGroundTruth) {
  // The prediction overlaps both ground truths by IoU 1/3.
  const std::vector<Segment> p{axel(2, 6)}, g{axel(4, 8), axel(0, 4)};
  EXPECT_EQ(match_segments(p, g, 10).tp, 1u);
  // After the tie the later-starting one remains for the second prediction.
  const std::vector<Segment> p2{axel(2, 6), axel(6, 8)};
  EXPECT_EQ(match_segments(p2, g, 10), (SegmentCounts{2, 0, 0}));
}

TEST(F1, EmptyConventions) {
  EXPECT_DOUBLE_EQ(f1_at_k({}, {}, 50).f1, 100.0);
  const std::vector<Segment> g{axel(0, 4)};
  EXPECT_DOUBLE_EQ(f1_at_k({}, g, 50).f1, 0.0);
  EXPECT_DOUBLE_EQ(f1_at_k(g, {}, 50).f1, 0.0);
}

TEST(F1, GreedyUsuallyAgreesWithExhaustiveOptimum) {
  std::mt19937_64 rng(32);
  int divergent = 0;
  for (int i = 0; i < 300; ++i) {
    const auto pred = testing::random_segments(rng, 60, 8, 4);
    const auto gt = testing::random_segments(rng, 60, 8, 4);
    const double k = kDefaultOverlaps[testing::uniform_index(rng, 0, 4)];
    const auto greedy = match_segments(pred, gt, k);
    const auto best = testing::exhaustive_max_tp(pred, gt, k);
    EXPECT_LE(greedy.tp, best.tp);
    EXPECT_EQ(greedy.tp + greedy.fp, pred.size());
    EXPECT_EQ(greedy.tp + greedy.fn, gt.size());
    divergent += greedy.tp != best.tp;
    if (k >= 50) {
      EXPECT_EQ(greedy.tp, best.tp) << "k=" << k;
    }
  }
  EXPECT_LE(divergent, 3);
}

TEST(Accuracy, CountsMatchingFrames) {
  FrameLabels p{Level::Set, {0, 1, 1, 2}}, g{Level::Set, {0, 1, 2, 2}};
  EXPECT_DOUBLE_EQ(frame_accuracy(p, g), 75.0);
  FrameLabels short_p{Level::Set, {0}};
  EXPECT_THROW(frame_accuracy(short_p, g), DimensionError);
  FrameLabels other_level{Level::Element, {0, 1, 1, 2}};
  EXPECT_THROW(frame_accuracy(other_level, g), DimensionError);
}

PoseSequence constant_pose(double x, double y, double z) {
  auto seq = PoseSequence::zeros(testing::h36m(), 3, 30.0, 4);
  for (std::size_t i = 0; i < seq.coords.size(); i += 3) {
    seq.coords[i] = x;
    seq.coords[i + 1] = y;
    seq.coords[i + 2] = z;
  }
  return seq;
}

TEST(Mpjpe, IdenticalIsZeroAndPythagoreanOffsetIsFive) {
  std::mt19937_64 rng(33);
  const auto a = testing::random_pose(rng, 6);
  EXPECT_EQ(mpjpe(a, a), 0.0);
  auto b = a;
  for (std::size_t i = 0; i < b.coords.size(); i += 3) {
    b.coords[i] += 3.0;
    b.coords[i + 1] += 4.0;
  }
  EXPECT_NEAR(mpjpe(b, a), 5.0, 1e-9);
  EXPECT_EQ(mpjpe(constant_pose(3, 4, 0), constant_pose(0, 0, 0)), 5.0);
}

TEST(Mpjpe, MaskedJointsAreExcluded) {
  auto pred = constant_pose(3, 4, 0);
  const auto gt = constant_pose(0, 0, 0);
  pred.mask = std::vector<bool>(4 * 17, true);
  for (std::size_t t = 0; t < 4; ++t) {
    pred.joint(t, 2)[0] = 1e6;
    (*pred.mask)[t * 17 + 2] = false;
  }
  EXPECT_EQ(mpjpe(pred, gt), 5.0);

  std::vector<bool> eval_mask(4 * 17, false);
  eval_mask[5] = true;
  EXPECT_EQ(mpjpe(constant_pose(0, 0, 7), gt, eval_mask), 7.0);
}

TEST(Mpjpe, ShapeAndUnitChecks) {
  auto a = constant_pose(0, 0, 0);
  auto b = a;
  b.units = Units::Normalized;
  EXPECT_THROW(mpjpe(a, b), DimensionError);
  std::vector<bool> none(4 * 17, false);
  EXPECT_THROW(mpjpe(a, a, none), RangeError);
}

SequenceAnnotation gt_with(std::vector<Segment> segs, std::size_t T, std::string id) {
  SequenceAnnotation a;
  a.sequence_id = std::move(id);
  a.total_frames = T;
  a.segments = std::move(segs);
  return a;
}

TEST(Corpus, MicroPoolsAndMacroAverages) {
  const auto g1 = gt_with({axel(0, 10)}, 20, "a");
  const auto g2 = gt_with({lutz(5, 15)}, 20, "b");
  EvalPair perfect{"a", expand_to_frames(g1), g1};
  EvalPair missed{"b", FrameLabels{Level::Set, std::vector<LabelId>(20, kNoneId)}, g2};

  const auto micro = evaluate_corpus({perfect, missed}, {50});
  EXPECT_DOUBLE_EQ(micro.accuracy, 30.0 / 40.0 * 100.0);
  EXPECT_EQ(micro.counts[0], (SegmentCounts{1, 0, 1}));
  EXPECT_DOUBLE_EQ(micro.scores[0].f1, 200.0 / 3.0);

  const auto macro = evaluate_corpus({perfect, missed}, {50}, Aggregation::Macro);
  EXPECT_DOUBLE_EQ(macro.accuracy, (100.0 + 50.0) / 2.0);
  EXPECT_DOUBLE_EQ(macro.scores[0].f1, 50.0);

  EXPECT_EQ(micro.per_label.at("Axel jump").counts[0], (SegmentCounts{1, 0, 0}));
  EXPECT_EQ(micro.per_label.at("Lutz jump").occurrences, 1u);
}

TEST(Corpus, IdMismatchIsAnError) {
  const auto g = gt_with({}, 5, "a");
  EvalPair pair{"b", expand_to_frames(g), g};
  EXPECT_THROW(evaluate_corpus({pair}), IdMismatchError);
}

TEST(Report, TableHasStandardColumns) {
  const auto g = gt_with({axel(0, 10)}, 20, "a");
  const auto report = evaluate_corpus({EvalPair{"a", expand_to_frames(g), g}});
  const std::string table = report.to_table();
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "    Acc   F1@10   F1@25   F1@50   F1@75   F1@90");
  EXPECT_NE(table.find(" 100.00  100.00"), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
  const auto g = gt_with({axel(0, 10), lutz(12, 18)}, 20, "a");
  FrameLabels pred = expand_to_frames(g);
  pred.labels[11] = pred.labels[0];
  const auto report = evaluate_corpus({EvalPair{"a", pred, g}});
  const auto back = EvalReport::from_json(report.to_json());
  EXPECT_EQ(back.to_json(), report.to_json());
  EXPECT_EQ(back.to_table(), report.to_table());
}

TEST(Report, RejectsBadThresholds) {
  const auto g = gt_with({}, 5, "a");
  EXPECT_THROW(evaluate_corpus({EvalPair{"a", expand_to_frames(g), g}}, {0}), RangeError);
}

}  // namespace
}  // namespace fsjump

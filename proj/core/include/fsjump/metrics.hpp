#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsjump/annotation.hpp"
#include "fsjump/labels.hpp"
#include "fsjump/pose.hpp"

namespace fsjump {

inline const std::vector<double> kDefaultOverlaps = {10, 25, 50, 75, 90};

// Percentage of frames whose predicted label equals the ground truth.
double frame_accuracy(const FrameLabels& pred, const FrameLabels& gt);

// |a ∩ b| / |a ∪ b| over half-open intervals.
double iou(const Segment& a, const Segment& b);

struct SegmentCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  SegmentCounts& operator+=(const SegmentCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const SegmentCounts&, const SegmentCounts&) = default;
};

struct F1Score {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy matching: predicted segments in temporal order each claim the
// unmatched same-label ground-truth segment of highest IoU (ties go to the
// earlier ground truth); a claim counts as a true positive when
// IoU >= overlap_percent / 100.
SegmentCounts match_segments(std::span<const Segment> pred,
                             std::span<const Segment> gt,
                             double overlap_percent);

// No predictions and no ground truth scores 100.
F1Score score_counts(const SegmentCounts& counts);

F1Score f1_at_k(std::span<const Segment> pred, std::span<const Segment> gt,
                double overlap_percent);

// Mean Euclidean joint error over joints valid in both sequences (and in
// `valid_mask`, T x J, when given).
double mpjpe(const PoseSequence& pred, const PoseSequence& gt,
             const std::optional<std::vector<bool>>& valid_mask = std::nullopt);

enum class Aggregation { Micro, Macro };

struct LabelBreakdown {
  std::size_t occurrences = 0;        // ground-truth segments
  std::vector<SegmentCounts> counts;  // one per overlap threshold
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> overlaps;
  std::vector<F1Score> scores;
  std::vector<SegmentCounts> counts;  // pooled over the corpus
  std::map<std::string, LabelBreakdown> per_label;
  std::size_t n_sequences = 0;
  Aggregation aggregation = Aggregation::Micro;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  // "Acc F1@10 F1@25 F1@50 F1@75 F1@90" header plus one row of values.
  std::string to_table() const;
};

struct EvalPair {
  std::string sequence_id;
  FrameLabels pred;
  SequenceAnnotation gt;
};

// Micro aggregation pools frames for accuracy and TP/FP/FN before computing
// P/R/F1; macro averages per-sequence scores.
EvalReport evaluate_corpus(const std::vector<EvalPair>& pairs,
                           const std::vector<double>& overlaps = kDefaultOverlaps,
                           Aggregation aggregation = Aggregation::Micro);

}  // namespace fsjump

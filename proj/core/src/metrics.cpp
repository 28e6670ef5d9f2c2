#include "fsjump/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fsjump/error.hpp"

namespace fsjump {

namespace {

std::string overlap_name(double k) {
  char buf[32];
  if (k == std::floor(k))
    std::snprintf(buf, sizeof buf, "F1@%.0f", k);
  else
    std::snprintf(buf, sizeof buf, "F1@%g", k);
  return buf;
}

void check_overlaps(const std::vector<double>& overlaps) {
  for (double k : overlaps)
    if (!(k > 0.0 && k <= 100.0))
      throw RangeError("overlap thresholds must lie in (0, 100]");
}

}  // namespace

double frame_accuracy(const FrameLabels& pred, const FrameLabels& gt) {
  if (pred.level != gt.level)
    throw DimensionError("prediction and ground truth levels differ");
  if (pred.size() != gt.size())
    throw DimensionError("prediction has " + std::to_string(pred.size()) +
                         " frames, ground truth " + std::to_string(gt.size()));
  if (gt.size() == 0) throw DimensionError("cannot score an empty sequence");
  std::size_t correct = 0;
  for (std::size_t t = 0; t < gt.size(); ++t)
    correct += pred.labels[t] == gt.labels[t];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(gt.size());
}

double iou(const Segment& a, const Segment& b) {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  const std::size_t inter = hi > lo ? hi - lo : 0;
  const std::size_t uni = a.length() + b.length() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

SegmentCounts match_segments(std::span<const Segment> pred,
                             std::span<const Segment> gt,
                             double overlap_percent) {
  for (const auto& s : pred)
    if (!gt.empty() && s.label.level != gt.front().label.level)
      throw DimensionError("prediction and ground truth levels differ");

  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pred[a].start < pred[b].start;
  });

  std::vector<bool> used(gt.size(), false);
  SegmentCounts c;
  for (std::size_t pi : order) {
    const auto& p = pred[pi];
    std::size_t best = gt.size();
    std::size_t best_inter = 0, best_union = 1;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].label != p.label) continue;
      const std::size_t lo = std::max(p.start, gt[g].start);
      const std::size_t hi = std::min(p.end, gt[g].end);
      const std::size_t inter = hi > lo ? hi - lo : 0;
      const std::size_t uni = p.length() + gt[g].length() - inter;
      // Exact rational comparison inter/uni > best_inter/best_union.
      const bool better =
          best == gt.size()
              ? true
              : inter * best_union > best_inter * uni ||
                    (inter * best_union == best_inter * uni &&
                     gt[g].start < gt[best].start);
      if (better) {
        best = g;
        best_inter = inter;
        best_union = uni;
      }
    }
    const bool hit =
        best < gt.size() && best_inter > 0 &&
        static_cast<double>(best_inter) * 100.0 >=
            overlap_percent * static_cast<double>(best_union);
    if (hit) {
      used[best] = true;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return c;
}

F1Score score_counts(const SegmentCounts& c) {
  if (c.tp + c.fp + c.fn == 0) return {100.0, 100.0, 100.0};
  F1Score s;
  s.precision = c.tp + c.fp == 0 ? 0.0 : 100.0 * c.tp / double(c.tp + c.fp);
  s.recall = c.tp + c.fn == 0 ? 0.0 : 100.0 * c.tp / double(c.tp + c.fn);
  s.f1 = s.precision + s.recall == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

F1Score f1_at_k(std::span<const Segment> pred, std::span<const Segment> gt,
                double overlap_percent) {
  return score_counts(match_segments(pred, gt, overlap_percent));
}

double mpjpe(const PoseSequence& pred, const PoseSequence& gt,
             const std::optional<std::vector<bool>>& valid_mask) {
  if (pred.dims != 3 || gt.dims != 3)
    throw DimensionError("MPJPE needs 3D poses");
  if (pred.frame_count != gt.frame_count ||
      pred.joint_count() != gt.joint_count())
    throw DimensionError("MPJPE inputs differ in shape");
  if (pred.units != gt.units)
    throw DimensionError("MPJPE inputs use different units");
  const std::size_t J = gt.joint_count();
  if (valid_mask && valid_mask->size() != gt.frame_count * J)
    throw DimensionError("MPJPE mask has wrong shape");

  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < gt.frame_count; ++t)
    for (std::size_t j = 0; j < J; ++j) {
      if (!pred.valid(t, j) || !gt.valid(t, j)) continue;
      if (valid_mask && !(*valid_mask)[t * J + j]) continue;
      const auto a = pred.joint(t, j);
      const auto b = gt.joint(t, j);
      sum += std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
      ++n;
    }
  if (n == 0) throw RangeError("MPJPE has no valid joints to score");
  return sum / static_cast<double>(n);
}

EvalReport evaluate_corpus(const std::vector<EvalPair>& pairs,
                           const std::vector<double>& overlaps,
                           Aggregation aggregation) {
  check_overlaps(overlaps);
  EvalReport r;
  r.overlaps = overlaps;
  r.aggregation = aggregation;
  r.n_sequences = pairs.size();
  r.counts.assign(overlaps.size(), {});
  if (pairs.empty()) throw DimensionError("nothing to evaluate");

  std::size_t correct_frames = 0, total_frames = 0;
  double macro_acc = 0.0;
  std::vector<F1Score> macro(overlaps.size());

  for (const auto& pair : pairs) {
    if (!pair.sequence_id.empty() && !pair.gt.sequence_id.empty() &&
        pair.sequence_id != pair.gt.sequence_id)
      throw IdMismatchError("prediction '" + pair.sequence_id +
                            "' paired with ground truth '" +
                            pair.gt.sequence_id + "'");
    if (pair.pred.level != pair.gt.level)
      throw DimensionError("prediction and ground truth levels differ for '" +
                           pair.gt.sequence_id + "'");
    const auto& taxonomy = default_taxonomy(pair.gt.level);
    const FrameLabels gt_frames = expand_to_frames(pair.gt, taxonomy);
    const double acc = frame_accuracy(pair.pred, gt_frames);
    std::size_t correct = 0;
    for (std::size_t t = 0; t < gt_frames.size(); ++t)
      correct += pair.pred.labels[t] == gt_frames.labels[t];
    correct_frames += correct;
    total_frames += gt_frames.size();
    macro_acc += acc;

    const auto pred_segments = segments_from_frames(pair.pred, taxonomy);
    const auto& gt_segments = pair.gt.segments;

    // Matching only pairs same-label segments, so per-label counts add up to
    // the sequence totals.
    std::map<std::string, std::pair<std::vector<Segment>, std::vector<Segment>>>
        by_label;
    for (const auto& s : pred_segments) by_label[s.label.name()].first.push_back(s);
    for (const auto& s : gt_segments) by_label[s.label.name()].second.push_back(s);

    for (std::size_t k = 0; k < overlaps.size(); ++k) {
      SegmentCounts seq_counts;
      for (const auto& [name, segs] : by_label) {
        const auto c = match_segments(segs.first, segs.second, overlaps[k]);
        seq_counts += c;
        auto& b = r.per_label[name];
        if (b.counts.empty()) b.counts.assign(overlaps.size(), {});
        b.counts[k] += c;
        if (k == 0) b.occurrences += segs.second.size();
      }
      r.counts[k] += seq_counts;
      const auto s = score_counts(seq_counts);
      macro[k].precision += s.precision;
      macro[k].recall += s.recall;
      macro[k].f1 += s.f1;
    }
  }

  if (aggregation == Aggregation::Micro) {
    r.accuracy = 100.0 * static_cast<double>(correct_frames) /
                 static_cast<double>(total_frames);
    for (const auto& c : r.counts) r.scores.push_back(score_counts(c));
  } else {
    const double n = static_cast<double>(pairs.size());
    r.accuracy = macro_acc / n;
    for (auto s : macro) {
      s.precision /= n;
      s.recall /= n;
      s.f1 /= n;
      r.scores.push_back(s);
    }
  }
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json thresholds = nlohmann::json::array();
  for (std::size_t k = 0; k < overlaps.size(); ++k)
    thresholds.push_back({{"k", overlaps[k]},
                          {"precision", scores[k].precision},
                          {"recall", scores[k].recall},
                          {"f1", scores[k].f1},
                          {"tp", counts[k].tp},
                          {"fp", counts[k].fp},
                          {"fn", counts[k].fn}});
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [name, b] : per_label) {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& x : b.counts)
      c.push_back({{"tp", x.tp}, {"fp", x.fp}, {"fn", x.fn}});
    labels[name] = {{"occurrences", b.occurrences}, {"counts", c}};
  }
  return {{"accuracy", accuracy},
          {"n_sequences", n_sequences},
          {"aggregation", aggregation == Aggregation::Micro ? "micro" : "macro"},
          {"thresholds", thresholds},
          {"per_label", labels}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.accuracy = j.at("accuracy").get<double>();
    r.n_sequences = j.at("n_sequences").get<std::size_t>();
    r.aggregation = j.at("aggregation").get<std::string>() == "macro"
                        ? Aggregation::Macro
                        : Aggregation::Micro;
    for (const auto& t : j.at("thresholds")) {
      r.overlaps.push_back(t.at("k").get<double>());
      r.scores.push_back({t.at("precision").get<double>(),
                          t.at("recall").get<double>(),
                          t.at("f1").get<double>()});
      r.counts.push_back({t.at("tp").get<std::size_t>(),
                          t.at("fp").get<std::size_t>(),
                          t.at("fn").get<std::size_t>()});
    }
    for (const auto& [name, b] : j.at("per_label").items()) {
      LabelBreakdown lb;
      lb.occurrences = b.at("occurrences").get<std::size_t>();
      for (const auto& c : b.at("counts"))
        lb.counts.push_back({c.at("tp").get<std::size_t>(),
                             c.at("fp").get<std::size_t>(),
                             c.at("fn").get<std::size_t>()});
      r.per_label[name] = std::move(lb);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("evaluation report: ") + e.what());
  }
  return r;
}

std::string EvalReport::to_table() const {
  std::string header, row;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%7s", "Acc");
  header += buf;
  std::snprintf(buf, sizeof buf, "%7.2f", accuracy);
  row += buf;
  for (std::size_t k = 0; k < overlaps.size(); ++k) {
    std::snprintf(buf, sizeof buf, " %7s", overlap_name(overlaps[k]).c_str());
    header += buf;
    std::snprintf(buf, sizeof buf, " %7.2f", scores[k].f1);
    row += buf;
  }
  return header + "\n" + row + "\n";
}

}  // namespace fsjump

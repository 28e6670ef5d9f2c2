#include "fsjump/annotation.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "fsjump/error.hpp"
#include "fsjump/io.hpp"

namespace fsjump {

nlohmann::json SequenceAnnotation::to_json() const {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : segments)
    segs.push_back(
        {{"label", s.label.name()}, {"start", s.start}, {"end", s.end}});
  return {{"sequence_id", sequence_id},
          {"level", to_string(level)},
          {"total_frames", total_frames},
          {"version", version},
          {"segments", std::move(segs)}};
}

SequenceAnnotation SequenceAnnotation::from_json(const nlohmann::json& j) {
  SequenceAnnotation a;
  try {
    a.sequence_id = j.value("sequence_id", std::string());
    a.level = parse_level(j.at("level").get<std::string>());
    a.total_frames = j.at("total_frames").get<std::size_t>();
    a.version = j.value("version", std::uint64_t{0});
    for (const auto& s : j.at("segments")) {
      const auto start = s.at("start").get<long long>();
      const auto end = s.at("end").get<long long>();
      if (start < 0 || end < 0)
        throw ParseError("segment bounds must be non-negative");
      a.segments.push_back({Label::parse(s.at("label").get<std::string>(),
                                         a.level),
                            static_cast<std::size_t>(start),
                            static_cast<std::size_t>(end)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("annotation: ") + e.what());
  }
  return a;
}

SequenceAnnotation SequenceAnnotation::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

void SequenceAnnotation::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2));
}

std::string to_string(ValidationMode mode) {
  return mode == ValidationMode::Strict ? "strict" : "lenient";
}

ValidationMode parse_validation_mode(const std::string& text) {
  if (text == "strict") return ValidationMode::Strict;
  if (text == "lenient") return ValidationMode::Lenient;
  throw ParseError("unknown validation mode '" + text + "'");
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::InvalidLabel: return "invalid-label";
    case ViolationKind::LevelMismatch: return "level-mismatch";
    case ViolationKind::NoneSegment: return "none-segment";
    case ViolationKind::EmptySegment: return "empty-segment";
    case ViolationKind::OutOfBounds: return "out-of-bounds";
    case ViolationKind::Unsorted: return "unsorted";
    case ViolationKind::Overlap: return "overlap";
    case ViolationKind::EntryWithoutJump: return "entry-without-jump";
    case ViolationKind::EntryTypeMismatch: return "type-mismatch";
    case ViolationKind::MissingLanding: return "missing-landing";
    case ViolationKind::OrphanLanding: return "orphan-landing";
  }
  return "?";
}

nlohmann::json Violation::to_json() const {
  return {{"kind", to_string(kind)},
          {"segment_index", segment_index},
          {"message", message}};
}

std::vector<Violation> validate_structure(const SequenceAnnotation& a) {
  std::vector<Violation> out;
  const auto add = [&](ViolationKind k, std::size_t i, std::string msg) {
    out.push_back({k, i, std::move(msg)});
  };
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    const auto& s = a.segments[i];
    const std::string where = "segment " + std::to_string(i) + " (" +
                              s.label.name() + " [" + std::to_string(s.start) +
                              "," + std::to_string(s.end) + "))";
    try {
      s.label.check();
    } catch (const InvalidAnnotationError& e) {
      add(ViolationKind::InvalidLabel, i, where + ": " + e.what());
    }
    if (s.label.level != a.level)
      add(ViolationKind::LevelMismatch, i,
          where + ": label level differs from annotation level");
    if (s.label.is_none())
      add(ViolationKind::NoneSegment, i,
          where + ": NONE is implicit and may not be stored");
    if (s.start >= s.end)
      add(ViolationKind::EmptySegment, i, where + ": start must be < end");
    if (s.end > a.total_frames)
      add(ViolationKind::OutOfBounds, i,
          where + ": ends past total_frames " + std::to_string(a.total_frames));
    if (i > 0) {
      const auto& p = a.segments[i - 1];
      if (s.start < p.start)
        add(ViolationKind::Unsorted, i, where + ": starts before segment " +
                                            std::to_string(i - 1));
      else if (s.start < p.end)
        add(ViolationKind::Overlap, i,
            where + ": overlaps segment " + std::to_string(i - 1));
    }
  }
  return out;
}

std::vector<Violation> validate(const SequenceAnnotation& a,
                                ValidationMode mode) {
  auto out = validate_structure(a);
  const auto& segs = a.segments;
  const auto follows = [&](std::size_t i) -> const Segment* {
    if (i + 1 >= segs.size() || segs[i + 1].start != segs[i].end) return nullptr;
    return &segs[i + 1];
  };
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    const Segment* next = follows(i);
    const std::string where = "segment " + std::to_string(i) + " (" +
                              s.label.name() + ")";
    switch (s.label.category) {
      case Category::Entry:
        if (!next || next->label.category != Category::Jump)
          out.push_back({ViolationKind::EntryWithoutJump, i,
                         where + ": entry is not immediately followed by a "
                                 "jump"});
        else if (next->label.jump_type != s.label.jump_type)
          out.push_back({ViolationKind::EntryTypeMismatch, i,
                         where + ": followed by " + next->label.name()});
        break;
      case Category::Jump:
        if (mode == ValidationMode::Strict &&
            (!next || next->label.category != Category::Landing))
          out.push_back({ViolationKind::MissingLanding, i,
                         where + ": jump is not immediately followed by a "
                                 "landing"});
        break;
      case Category::Landing: {
        const bool after_jump = i > 0 &&
                                segs[i - 1].end == s.start &&
                                segs[i - 1].label.category == Category::Jump;
        if (!after_jump)
          out.push_back({ViolationKind::OrphanLanding, i,
                         where + ": landing does not immediately follow a "
                                 "jump"});
        break;
      }
      case Category::None:
        break;
    }
  }
  return out;
}

FrameLabels expand_to_frames(const SequenceAnnotation& a,
                             const LabelTaxonomy& taxonomy) {
  if (const auto v = validate_structure(a); !v.empty())
    throw InvalidAnnotationError("annotation '" + a.sequence_id +
                                 "': " + v.front().message);
  if (taxonomy.level() != a.level)
    throw InvalidAnnotationError("taxonomy level differs from annotation");
  FrameLabels out{a.level, std::vector<LabelId>(a.total_frames, kNoneId)};
  for (const auto& s : a.segments) {
    const LabelId id = taxonomy.id_of(s.label);
    for (std::size_t t = s.start; t < s.end; ++t) out.labels[t] = id;
  }
  return out;
}

FrameLabels expand_to_frames(const SequenceAnnotation& a) {
  return expand_to_frames(a, default_taxonomy(a.level));
}

std::vector<Segment> segments_from_frames(const FrameLabels& frames,
                                          const LabelTaxonomy& taxonomy) {
  std::vector<Segment> out;
  const auto& l = frames.labels;
  std::size_t t = 0;
  while (t < l.size()) {
    std::size_t end = t + 1;
    while (end < l.size() && l[end] == l[t]) ++end;
    if (l[t] != kNoneId) out.push_back({taxonomy.label(l[t]), t, end});
    t = end;
  }
  return out;
}

std::vector<Segment> segments_from_frames(const FrameLabels& frames) {
  return segments_from_frames(frames, default_taxonomy(frames.level));
}

SequenceAnnotation annotation_from_frames(const FrameLabels& frames,
                                          const LabelTaxonomy& taxonomy,
                                          std::string sequence_id) {
  SequenceAnnotation a;
  a.sequence_id = std::move(sequence_id);
  a.level = frames.level;
  a.total_frames = frames.size();
  a.segments = segments_from_frames(frames, taxonomy);
  return a;
}

SequenceAnnotation project_annotation_to_set(const SequenceAnnotation& a) {
  SequenceAnnotation out = a;
  out.level = Level::Set;
  for (auto& s : out.segments) s.label = project_to_set(s.label);
  return out;
}

SequenceAnnotation to_coarse(const SequenceAnnotation& a) {
  if (const auto v = validate(a, ValidationMode::Lenient); !v.empty())
    throw InvalidAnnotationError("annotation '" + a.sequence_id +
                                 "' is invalid: " + v.front().message);
  SequenceAnnotation out = a;
  out.segments.clear();
  for (const auto& s : a.segments)
    if (s.label.category == Category::Jump) out.segments.push_back(s);
  return out;
}

std::vector<JumpInstance> jump_instances(const SequenceAnnotation& a) {
  std::vector<JumpInstance> out;
  const auto& segs = a.segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].label.category != Category::Jump) continue;
    JumpInstance inst{std::nullopt, segs[i], std::nullopt};
    if (i > 0 && segs[i - 1].label.category == Category::Entry &&
        segs[i - 1].end == segs[i].start &&
        segs[i - 1].label.jump_type == segs[i].label.jump_type)
      inst.entry = segs[i - 1];
    if (i + 1 < segs.size() &&
        segs[i + 1].label.category == Category::Landing &&
        segs[i + 1].start == segs[i].end)
      inst.landing = segs[i + 1];
    out.push_back(std::move(inst));
  }
  return out;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

nlohmann::json CorpusStats::to_json() const {
  nlohmann::json occ = nlohmann::json::object();
  for (const auto& [label, n] : occurrences) occ[label.name()] = n;
  return {{"n_videos", n_videos},
          {"mean_total_frames", mean_total_frames},
          {"mean_action_frames", mean_action_frames},
          {"action_frame_ratio", action_frame_ratio},
          {"n_jumps", n_jumps},
          {"mean_jump_duration_frames", mean_jump_duration_frames},
          {"occurrences", occ}};
}

std::string CorpusStats::to_text() const {
  std::ostringstream os;
  os << "videos                 " << n_videos << "\n"
     << "mean total frames      " << mean_total_frames << "\n"
     << "mean action frames     " << mean_action_frames << "\n"
     << "action-frame ratio (%) " << format_percent(action_frame_ratio) << "\n"
     << "jumps                  " << n_jumps << "\n"
     << "mean jump duration     " << mean_jump_duration_frames << " frames\n"
     << "occurrences:\n";
  for (const auto& [label, n] : occurrences)
    os << "  " << label.name() << "\t" << n << "\n";
  return os.str();
}

CorpusStats corpus_stats(const std::vector<SequenceAnnotation>& annotations,
                         const std::map<std::string, std::size_t>& frame_counts) {
  std::set<std::string> seen;
  for (const auto& a : annotations) {
    if (!frame_counts.contains(a.sequence_id))
      throw IdMismatchError("no frame count for annotation '" + a.sequence_id +
                            "'");
    if (!seen.insert(a.sequence_id).second)
      throw IdMismatchError("duplicate annotation '" + a.sequence_id + "'");
  }
  if (seen.size() != frame_counts.size())
    throw IdMismatchError("frame counts list sequences without annotations");

  CorpusStats s;
  s.n_videos = annotations.size();
  std::size_t total = 0, action = 0, jump_frames = 0;
  for (const auto& a : annotations) {
    const std::size_t T = frame_counts.at(a.sequence_id);
    total += T;
    for (const auto& seg : a.segments) {
      if (seg.end > T)
        throw IdMismatchError("annotation '" + a.sequence_id +
                              "' extends past its " + std::to_string(T) +
                              " frames");
      action += seg.length();
      if (seg.label.category == Category::Jump) {
        ++s.occurrences[seg.label];
        ++s.n_jumps;
        jump_frames += seg.length();
      }
    }
  }
  if (s.n_videos > 0) {
    s.mean_total_frames = static_cast<double>(total) / s.n_videos;
    s.mean_action_frames = static_cast<double>(action) / s.n_videos;
  }
  if (total > 0)
    s.action_frame_ratio =
        static_cast<double>(action) / static_cast<double>(total) * 100.0;
  if (s.n_jumps > 0)
    s.mean_jump_duration_frames =
        static_cast<double>(jump_frames) / static_cast<double>(s.n_jumps);
  return s;
}

}  // namespace fsjump

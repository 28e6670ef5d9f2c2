#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsjump/labels.hpp"

namespace fsjump {

// Ordered, non-overlapping action segments of one sequence. Background is the
// gaps between segments; no stored segment carries NONE.
struct SequenceAnnotation {
  std::string sequence_id;
  Level level = Level::Set;
  std::size_t total_frames = 0;
  std::vector<Segment> segments;
  std::uint64_t version = 0;

  nlohmann::json to_json() const;
  static SequenceAnnotation from_json(const nlohmann::json& j);
  static SequenceAnnotation load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const SequenceAnnotation&,
                         const SequenceAnnotation&) = default;
};

enum class ValidationMode { Strict, Lenient };

std::string to_string(ValidationMode mode);
ValidationMode parse_validation_mode(const std::string& text);

enum class ViolationKind {
  InvalidLabel,
  LevelMismatch,
  NoneSegment,
  EmptySegment,
  OutOfBounds,
  Unsorted,
  Overlap,
  EntryWithoutJump,
  EntryTypeMismatch,
  MissingLanding,
  OrphanLanding,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t segment_index;
  std::string message;

  nlohmann::json to_json() const;
};

// Structural checks (bounds, order, overlap, labels) plus jump-procedure
// rules: ENTRY is immediately followed by a JUMP of the same type, LANDING
// immediately follows a JUMP. Strict mode additionally requires every JUMP to
// be immediately followed by a LANDING; lenient mode allows combination
// jumps (JUMP -> JUMP) and jumps without a landing. "Immediately" means the
// next segment starts where the previous one ends.
std::vector<Violation> validate(const SequenceAnnotation& annotation,
                                ValidationMode mode);

// Only the structural subset of validate().
std::vector<Violation> validate_structure(const SequenceAnnotation& annotation);

FrameLabels expand_to_frames(const SequenceAnnotation& annotation,
                             const LabelTaxonomy& taxonomy);
FrameLabels expand_to_frames(const SequenceAnnotation& annotation);

// Maximal runs of identical non-NONE labels.
std::vector<Segment> segments_from_frames(const FrameLabels& frames,
                                          const LabelTaxonomy& taxonomy);
std::vector<Segment> segments_from_frames(const FrameLabels& frames);

SequenceAnnotation annotation_from_frames(const FrameLabels& frames,
                                          const LabelTaxonomy& taxonomy,
                                          std::string sequence_id = {});

// Element-level annotation with every label projected to the set level.
SequenceAnnotation project_annotation_to_set(const SequenceAnnotation& annotation);

// Removes ENTRY and LANDING segments; JUMP segments are untouched.
SequenceAnnotation to_coarse(const SequenceAnnotation& annotation);

struct JumpInstance {
  std::optional<Segment> entry;
  Segment jump;
  std::optional<Segment> landing;
};

// Groups an annotation's segments into entry/jump/landing instances.
std::vector<JumpInstance> jump_instances(const SequenceAnnotation& annotation);

struct CorpusStats {
  std::size_t n_videos = 0;
  double mean_total_frames = 0.0;
  double mean_action_frames = 0.0;
  double action_frame_ratio = 0.0;  // percent
  std::size_t n_jumps = 0;
  double mean_jump_duration_frames = 0.0;
  std::map<Label, std::size_t> occurrences;  // JUMP segments per label

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// frame_counts maps sequence id to its frame count; ids must match the
// annotations one-to-one (IdMismatchError otherwise).
CorpusStats corpus_stats(const std::vector<SequenceAnnotation>& annotations,
                         const std::map<std::string, std::size_t>& frame_counts);

// Two-decimal rendering used in reports ("8.96").
std::string format_percent(double value);

}  // namespace fsjump

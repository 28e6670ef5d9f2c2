#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsjump/labels.hpp"
#include "fsjump/pose.hpp"

namespace fsjump {

enum class PoseFormat { Json, Binary };

PoseFormat parse_pose_format(const std::string& text);

// Binary layout: "FSPS", u16 version, u32 header length, JSON header, then
// T*J*dims float32 little-endian values, then the optional confidence block
// (T*J float32) and mask block (T*J bytes).
inline constexpr char kPoseMagic[4] = {'F', 'S', 'P', 'S'};
inline constexpr std::uint16_t kPoseBinaryVersion = 1;

nlohmann::json pose_to_json(const PoseSequence& seq);
PoseSequence pose_from_json(const nlohmann::json& j);

// Detects the format from the leading magic bytes.
PoseSequence load_pose_sequence(const std::filesystem::path& path);
void save_pose_sequence(const PoseSequence& seq,
                        const std::filesystem::path& path, PoseFormat format);

std::vector<std::uint8_t> encode_pose_binary(const PoseSequence& seq);
PoseSequence decode_pose_binary(const std::vector<std::uint8_t>& bytes);

// Raw marker-less capture export: per-frame positions of a fixed keypoint set.
struct MocapRecording {
  double fps = 0.0;
  std::size_t keypoint_count = 0;
  std::size_t frame_count = 0;
  std::vector<double> positions;  // T x K x 3, millimeters
  SequenceMeta meta;
};

// JSON: {"fps", "units": "mm"|"m", "frames": [[[x,y,z], ...K], ...T],
// optional "keypoint_count", "meta"}.
MocapRecording load_mocap(const std::filesystem::path& path);
nlohmann::json mocap_to_json(const MocapRecording& rec);

// Target-joint rules over a source keypoint set. A rule with one index copies
// that keypoint; a rule with several averages them.
struct RigMapping {
  std::size_t source_keypoint_count = 0;
  std::string target_rig = "h36m";
  std::vector<std::vector<std::size_t>> rules;  // indexed by target joint

  void validate(const JointRig& target) const;
  nlohmann::json to_json(const JointRig& target) const;
  static RigMapping from_json(const nlohmann::json& j, const JointRig& target);
  static RigMapping load(const std::filesystem::path& path,
                         const JointRig& target);
};

inline constexpr std::size_t kFsJump3dKeypoints = 86;
inline constexpr double kFsJump3dFps = 60.0;

// Maps an 86-keypoint 60 fps capture onto the target rig (default H3.6M).
PoseSequence ingest_fsjump3d(const MocapRecording& rec,
                             const RigMapping& mapping,
                             const JointRig& target = JointRig::human36m());

// Integer downsampling ratios keep every k-th frame; anything else
// interpolates linearly. Confidence takes the minimum of bracketing frames.
PoseSequence resample(const PoseSequence& seq, double target_fps);

struct ManifestEntry {
  std::string sequence_id;
  std::filesystem::path pose_file;
  std::optional<std::filesystem::path> annotation_file;
  std::string competition_id;
  std::string split_hint;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  const ManifestEntry* find(const std::string& sequence_id) const;

  // Relative paths resolve against the manifest's directory. When
  // check_files is set, every pose file must exist.
  static CorpusManifest load(const std::filesystem::path& path,
                             bool check_files = true);
  static CorpusManifest from_json(const nlohmann::json& j,
                                  std::filesystem::path base_dir);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;
};

struct SplitOptions {
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Whole competitions go to test (those listed) or to exactly one of
// train/val; val receives shuffled competitions until it holds at least
// val_fraction of the non-test sequences.
Split split_by_competition(const CorpusManifest& manifest,
                           const std::vector<std::string>& test_competitions,
                           const SplitOptions& options = {});

// One label name per line; blank lines ignored.
FrameLabels import_external_predictions(const std::filesystem::path& path,
                                        const LabelTaxonomy& taxonomy);
void write_frame_labels(const FrameLabels& labels,
                        const LabelTaxonomy& taxonomy,
                        const std::filesystem::path& path);

// Helpers shared by the file formats.
nlohmann::json read_json_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames over the destination.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace fsjump

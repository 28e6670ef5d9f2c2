#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsjump/pose.hpp"

namespace fsjump {

inline constexpr double kDefaultConfidenceThreshold = 0.3;

// Joints whose confidence is strictly below the threshold become (0, 0, 0)
// and are marked invalid. Requires a confidence channel.
PoseSequence mask_low_confidence(const PoseSequence& seq,
                                 double threshold = kDefaultConfidenceThreshold);

// Translates each frame so the hip midpoint sits at the origin. Frames whose
// hips are not both valid reuse the previous frame's translation.
PoseSequence center_root(const PoseSequence& seq);

struct NormalizeResult {
  PoseSequence sequence;
  double scale = 0.0;  // in the input's units
  bool degenerate = false;
};

// Divides by the largest absolute coordinate over valid joints.
NormalizeResult normalize_maxabs(const PoseSequence& seq);

// Yaw of the facing vector normalize((Lhip - Rhip) x up) relative to the rig's
// forward axis, in (-pi, pi]. Throws DegenerateHipsError when the hips are
// masked or (nearly) coincide in the horizontal plane.
double facing_angle(std::span<const double> frame, const JointRig& rig,
                    bool hips_valid = true);
double facing_angle(const PoseSequence& seq, std::size_t t);

// Rotates a 3D frame in place by `angle` radians about the rig's up axis.
void rotate_about_up(std::span<double> frame, const UpAxis& up, double angle);

// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);
std::vector<double> unwrap_angles(std::span<const double> radians);

enum class AlignMode { PerFrame, PerSequence };

struct AlignmentResult {
  PoseSequence aligned;
  // (yaw, pitch, roll) per frame; rotating an aligned frame by yaw about the
  // up axis restores the original frame. Pitch and roll are always 0.
  std::vector<std::array<double, 3>> euler;
  std::vector<double> unwrapped_yaw;
  std::vector<bool> degenerate;  // frame reused the previous rotation
};

AlignmentResult align_pose_sequence(const PoseSequence& seq,
                                    AlignMode mode = AlignMode::PerFrame);

// T x D frame features. Row layout: joint coordinates in rig order
// (J * dims), then unwrapped (yaw, pitch, roll) if has_euler, then one
// validity flag per joint if has_mask_flags.
struct FeatureSequence {
  std::size_t frame_count = 0;
  std::size_t dims = 0;
  std::vector<double> values;
  double fps = 0.0;
  std::string sequence_id;
  bool has_euler = false;
  bool has_mask_flags = false;

  std::span<const double> row(std::size_t t) const {
    return {values.data() + t * dims, dims};
  }

  nlohmann::json to_json() const;
  static FeatureSequence from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static FeatureSequence load(const std::filesystem::path& path);
};

struct FeatureOptions {
  bool include_euler = true;
  bool include_conf_mask = false;
};

// `unwrapped_yaw` may be empty when include_euler is false.
FeatureSequence build_features(const PoseSequence& seq,
                               std::span<const double> unwrapped_yaw,
                               const FeatureOptions& options);

struct PreprocessOptions {
  double confidence_threshold = kDefaultConfidenceThreshold;
  bool align = true;
  AlignMode align_mode = AlignMode::PerFrame;
  bool normalize = true;
  double target_fps = 0.0;  // 0 keeps the source rate
  FeatureOptions features;
};

// mask (if confidence present) -> center -> normalize -> align -> features.
FeatureSequence preprocess_sequence(const PoseSequence& seq,
                                    const PreprocessOptions& options = {});

}  // namespace fsjump

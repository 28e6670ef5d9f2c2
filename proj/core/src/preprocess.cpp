#include "fsjump/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "fsjump/error.hpp"
#include "fsjump/io.hpp"

namespace fsjump {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d to_eigen(const std::array<double, 3>& a) {
  return {a[0], a[1], a[2]};
}

void rezero_masked(PoseSequence& seq) {
  if (!seq.mask) return;
  for (std::size_t t = 0; t < seq.frame_count; ++t)
    for (std::size_t j = 0; j < seq.joint_count(); ++j)
      if (!seq.valid(t, j))
        for (auto& v : seq.joint(t, j)) v = 0.0;
}

struct YawTrack {
  std::vector<double> yaw;
  std::vector<bool> degenerate;
};

// Per-frame facing yaw; degenerate frames carry the previous yaw (0 before
// the first usable frame).
YawTrack track_yaw(const PoseSequence& seq) {
  YawTrack track;
  track.yaw.resize(seq.frame_count);
  track.degenerate.resize(seq.frame_count);
  double previous = 0.0;
  for (std::size_t t = 0; t < seq.frame_count; ++t) {
    try {
      previous = facing_angle(seq, t);
      track.degenerate[t] = false;
    } catch (const DegenerateHipsError&) {
      track.degenerate[t] = true;
    }
    track.yaw[t] = previous;
  }
  return track;
}

}  // namespace

PoseSequence mask_low_confidence(const PoseSequence& seq, double threshold) {
  if (!seq.confidence)
    throw DimensionError("confidence masking needs a confidence channel");
  PoseSequence out = seq;
  const std::size_t J = seq.joint_count();
  if (!out.mask) out.mask.emplace(seq.frame_count * J, true);
  for (std::size_t t = 0; t < seq.frame_count; ++t)
    for (std::size_t j = 0; j < J; ++j)
      if ((*seq.confidence)[t * J + j] < threshold) {
        (*out.mask)[t * J + j] = false;
        for (auto& v : out.joint(t, j)) v = 0.0;
      }
  return out;
}

PoseSequence center_root(const PoseSequence& seq) {
  PoseSequence out = seq;
  const auto& rig = *seq.rig;
  const std::size_t lh = rig.left_hip_index(), rh = rig.right_hip_index();
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  for (std::size_t t = 0; t < seq.frame_count; ++t) {
    if (seq.valid(t, lh) && seq.valid(t, rh)) {
      const auto l = seq.joint(t, lh);
      const auto r = seq.joint(t, rh);
      for (int d = 0; d < seq.dims; ++d) offset[d] = 0.5 * (l[d] + r[d]);
    }
    for (std::size_t j = 0; j < seq.joint_count(); ++j) {
      auto p = out.joint(t, j);
      for (int d = 0; d < seq.dims; ++d) p[d] -= offset[d];
    }
  }
  rezero_masked(out);
  return out;
}

NormalizeResult normalize_maxabs(const PoseSequence& seq) {
  double scale = 0.0;
  for (std::size_t t = 0; t < seq.frame_count; ++t)
    for (std::size_t j = 0; j < seq.joint_count(); ++j)
      if (seq.valid(t, j))
        for (double v : seq.joint(t, j)) scale = std::max(scale, std::abs(v));

  NormalizeResult result{seq, scale, scale == 0.0};
  result.sequence.units = Units::Normalized;
  if (result.degenerate) {
    std::fill(result.sequence.coords.begin(), result.sequence.coords.end(), 0.0);
    return result;
  }
  for (auto& v : result.sequence.coords) v /= scale;
  rezero_masked(result.sequence);
  return result;
}

double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

std::vector<double> unwrap_angles(std::span<const double> radians) {
  std::vector<double> out(radians.size());
  for (std::size_t t = 0; t < radians.size(); ++t)
    out[t] = t == 0 ? radians[0]
                    : out[t - 1] + wrap_angle(radians[t] - radians[t - 1]);
  return out;
}

double facing_angle(std::span<const double> frame, const JointRig& rig,
                    bool hips_valid) {
  if (frame.size() != rig.joint_count() * 3)
    throw DimensionError("facing angle needs a 3D frame of the rig's shape");
  if (!hips_valid) throw DegenerateHipsError("hip joints are masked");

  double scale = 0.0;
  for (double v : frame) scale = std::max(scale, std::abs(v));
  const auto l = frame.subspan(rig.left_hip_index() * 3, 3);
  const auto r = frame.subspan(rig.right_hip_index() * 3, 3);
  const Eigen::Vector3d hip(l[0] - r[0], l[1] - r[1], l[2] - r[2]);
  const Eigen::Vector3d up = to_eigen(rig.up().vector());
  const Eigen::Vector3d forward = to_eigen(rig.up().forward());
  const Eigen::Vector3d side = forward.cross(up);

  const Eigen::Vector3d facing = hip.cross(up);  // already horizontal
  const double separation = facing.norm();
  if (scale == 0.0 || !(separation > 1e-6 * scale))
    throw DegenerateHipsError("hip joints coincide in the horizontal plane");
  return wrap_angle(std::atan2(-facing.dot(side), facing.dot(forward)));
}

double facing_angle(const PoseSequence& seq, std::size_t t) {
  if (seq.dims != 3) throw DimensionError("facing angle needs 3D poses");
  const auto& rig = *seq.rig;
  return facing_angle(seq.frame(t), rig,
                      seq.valid(t, rig.left_hip_index()) &&
                          seq.valid(t, rig.right_hip_index()));
}

void rotate_about_up(std::span<double> frame, const UpAxis& up, double angle) {
  if (frame.size() % 3 != 0)
    throw DimensionError("rotation needs 3D coordinates");
  const Eigen::Matrix3d R =
      Eigen::AngleAxisd(angle, to_eigen(up.vector())).toRotationMatrix();
  for (std::size_t i = 0; i < frame.size(); i += 3) {
    Eigen::Map<Eigen::Vector3d> p(frame.data() + i);
    p = R * Eigen::Vector3d(p);
  }
}

AlignmentResult align_pose_sequence(const PoseSequence& seq, AlignMode mode) {
  if (seq.dims != 3) throw DimensionError("pose alignment needs 3D poses");
  YawTrack track = track_yaw(seq);

  if (mode == AlignMode::PerSequence) {
    double s = 0.0, c = 0.0;
    for (std::size_t t = 0; t < seq.frame_count; ++t)
      if (!track.degenerate[t]) {
        s += std::sin(track.yaw[t]);
        c += std::cos(track.yaw[t]);
      }
    const double mean = (s == 0.0 && c == 0.0) ? 0.0 : std::atan2(s, c);
    std::fill(track.yaw.begin(), track.yaw.end(), mean);
  }

  AlignmentResult result;
  result.aligned = seq;
  result.degenerate = track.degenerate;
  result.euler.resize(seq.frame_count);
  for (std::size_t t = 0; t < seq.frame_count; ++t) {
    result.euler[t] = {track.yaw[t], 0.0, 0.0};
    rotate_about_up(result.aligned.frame(t), seq.rig->up(), -track.yaw[t]);
  }
  rezero_masked(result.aligned);
  result.unwrapped_yaw = unwrap_angles(track.yaw);
  return result;
}

nlohmann::json FeatureSequence::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < frame_count; ++t) {
    const auto r = row(t);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"frames", frame_count},   {"dims", dims},
          {"fps", fps},              {"sequence_id", sequence_id},
          {"has_euler", has_euler},  {"has_mask_flags", has_mask_flags},
          {"values", std::move(rows)}};
}

FeatureSequence FeatureSequence::from_json(const nlohmann::json& j) {
  FeatureSequence f;
  try {
    f.frame_count = j.at("frames").get<std::size_t>();
    f.dims = j.at("dims").get<std::size_t>();
    f.fps = j.value("fps", 0.0);
    f.sequence_id = j.value("sequence_id", std::string());
    f.has_euler = j.value("has_euler", false);
    f.has_mask_flags = j.value("has_mask_flags", false);
    const auto& rows = j.at("values");
    if (rows.size() != f.frame_count)
      throw DimensionError("feature file declares " +
                           std::to_string(f.frame_count) + " frames, holds " +
                           std::to_string(rows.size()));
    f.values.reserve(f.frame_count * f.dims);
    for (const auto& r : rows) {
      if (r.size() != f.dims)
        throw DimensionError("feature row has wrong width");
      for (const auto& v : r) {
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw RangeError("non-finite feature value");
        f.values.push_back(d);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("feature file: ") + e.what());
  }
  return f;
}

void FeatureSequence::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump());
}

FeatureSequence FeatureSequence::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

FeatureSequence build_features(const PoseSequence& seq,
                               std::span<const double> unwrapped_yaw,
                               const FeatureOptions& options) {
  if (options.include_euler && unwrapped_yaw.size() != seq.frame_count)
    throw DimensionError("euler track has " +
                         std::to_string(unwrapped_yaw.size()) +
                         " frames, pose has " +
                         std::to_string(seq.frame_count));
  const std::size_t J = seq.joint_count();
  FeatureSequence f;
  f.frame_count = seq.frame_count;
  f.dims = seq.frame_stride() + (options.include_euler ? 3 : 0) +
           (options.include_conf_mask ? J : 0);
  f.fps = seq.fps;
  f.sequence_id = seq.meta.sequence_id;
  f.has_euler = options.include_euler;
  f.has_mask_flags = options.include_conf_mask;
  f.values.reserve(f.frame_count * f.dims);
  for (std::size_t t = 0; t < seq.frame_count; ++t) {
    for (std::size_t j = 0; j < J; ++j)
      for (double v : seq.joint(t, j))
        f.values.push_back(seq.valid(t, j) ? v : 0.0);
    if (options.include_euler) {
      f.values.push_back(unwrapped_yaw[t]);
      f.values.push_back(0.0);
      f.values.push_back(0.0);
    }
    if (options.include_conf_mask)
      for (std::size_t j = 0; j < J; ++j)
        f.values.push_back(seq.valid(t, j) ? 1.0 : 0.0);
  }
  for (double v : f.values)
    if (!std::isfinite(v)) throw RangeError("non-finite feature value");
  return f;
}

FeatureSequence preprocess_sequence(const PoseSequence& input,
                                    const PreprocessOptions& options) {
  input.validate();
  PoseSequence seq = options.target_fps > 0.0
                         ? resample(input, options.target_fps)
                         : input;
  if (seq.confidence) seq = mask_low_confidence(seq, options.confidence_threshold);
  seq = center_root(seq);
  if (options.normalize) seq = normalize_maxabs(seq).sequence;

  std::vector<double> yaw;
  if (seq.dims == 3 && options.align) {
    auto aligned = align_pose_sequence(seq, options.align_mode);
    seq = std::move(aligned.aligned);
    yaw = std::move(aligned.unwrapped_yaw);
  } else if (seq.dims == 3 && options.features.include_euler) {
    yaw = unwrap_angles(track_yaw(seq).yaw);
  } else if (options.features.include_euler) {
    throw DimensionError("euler features need 3D poses");
  }
  return build_features(seq, yaw, options.features);
}

}  // namespace fsjump

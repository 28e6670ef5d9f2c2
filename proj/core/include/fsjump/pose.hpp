#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsjump/rig.hpp"

namespace fsjump {

enum class Units { Millimeters, Normalized };

std::string to_string(Units u);
Units parse_units(const std::string& text);

struct SequenceMeta {
  std::string sequence_id;
  std::string source_video_id;
  std::string competition_id;

  friend bool operator==(const SequenceMeta&, const SequenceMeta&) = default;
};

// T x J x dims joint coordinates with optional per-joint confidence and
// validity mask. Storage is row-major: frame, joint, axis.
struct PoseSequence {
  std::shared_ptr<const JointRig> rig;
  int dims = 3;
  double fps = 0.0;
  Units units = Units::Millimeters;
  std::size_t frame_count = 0;
  std::vector<double> coords;
  std::optional<std::vector<double>> confidence;  // T x J, in [0, 1]
  std::optional<std::vector<bool>> mask;          // T x J, true = valid
  SequenceMeta meta;

  // Zero-filled sequence of the given shape.
  static PoseSequence zeros(std::shared_ptr<const JointRig> rig, int dims,
                            double fps, std::size_t frames);

  std::size_t joint_count() const { return rig ? rig->joint_count() : 0; }
  std::size_t frame_stride() const { return joint_count() * dims; }

  std::span<double> frame(std::size_t t) {
    return {coords.data() + t * frame_stride(), frame_stride()};
  }
  std::span<const double> frame(std::size_t t) const {
    return {coords.data() + t * frame_stride(), frame_stride()};
  }
  std::span<double> joint(std::size_t t, std::size_t j) {
    return {coords.data() + (t * joint_count() + j) * dims,
            static_cast<std::size_t>(dims)};
  }
  std::span<const double> joint(std::size_t t, std::size_t j) const {
    return {coords.data() + (t * joint_count() + j) * dims,
            static_cast<std::size_t>(dims)};
  }

  bool valid(std::size_t t, std::size_t j) const {
    return !mask || (*mask)[t * joint_count() + j];
  }

  // Throws DimensionError / RangeError on any broken invariant.
  void validate() const;
};

}  // namespace fsjump

#include "fsjump/pose.hpp"

#include <cmath>

#include "fsjump/error.hpp"

namespace fsjump {

std::string to_string(Units u) {
  return u == Units::Millimeters ? "mm" : "normalized";
}

Units parse_units(const std::string& text) {
  if (text == "mm") return Units::Millimeters;
  if (text == "normalized") return Units::Normalized;
  throw ParseError("unknown units '" + text + "'");
}

PoseSequence PoseSequence::zeros(std::shared_ptr<const JointRig> rig, int dims,
                                 double fps, std::size_t frames) {
  PoseSequence s;
  s.rig = std::move(rig);
  s.dims = dims;
  s.fps = fps;
  s.frame_count = frames;
  s.coords.assign(frames * s.frame_stride(), 0.0);
  return s;
}

void PoseSequence::validate() const {
  if (!rig) throw DimensionError("pose sequence has no rig");
  if (dims != 2 && dims != 3)
    throw DimensionError("dims must be 2 or 3, got " + std::to_string(dims));
  if (!(fps > 0.0) || !std::isfinite(fps))
    throw RangeError("fps must be positive and finite");
  if (frame_count < 1) throw DimensionError("pose sequence has no frames");
  const std::size_t cells = frame_count * joint_count();
  if (coords.size() != cells * dims)
    throw DimensionError("coordinate payload has " +
                         std::to_string(coords.size()) + " values, expected " +
                         std::to_string(cells * dims));
  for (std::size_t i = 0; i < coords.size(); ++i)
    if (!std::isfinite(coords[i]))
      throw RangeError("non-finite coordinate at frame " +
                       std::to_string(i / frame_stride()));
  if (confidence) {
    if (confidence->size() != cells)
      throw DimensionError("confidence has wrong shape");
    for (std::size_t i = 0; i < cells; ++i) {
      const double c = (*confidence)[i];
      if (!(c >= 0.0 && c <= 1.0))
        throw RangeError("confidence " + std::to_string(c) + " at frame " +
                         std::to_string(i / joint_count()) + ", joint " +
                         std::to_string(i % joint_count()) +
                         " outside [0, 1]");
    }
  }
  if (mask && mask->size() != cells)
    throw DimensionError("mask has wrong shape");
}

}  // namespace fsjump

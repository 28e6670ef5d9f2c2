#include "fsjump/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fsjump/error.hpp"

namespace fsjump {

namespace {

constexpr double kPi = std::numbers::pi;

using Vec3 = std::array<double, 3>;

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 normalized(const Vec3& a) {
  const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  return n > 0 ? scale(a, 1.0 / n) : a;
}

// Joint angles (radians) and offsets describing one body configuration in
// the skater's own frame: +X right, +Y forward, +Z up.
struct BodyParams {
  double lean = 0.0;
  double head_tilt = 0.0;
  double crouch = 0.0;
  double cross = 0.0;  // legs drawn toward the midline
  double swing_r = 0.0, swing_l = 0.0;
  double knee_r = 0.0, knee_l = 0.0;
  double abd_r = 0.5, abd_l = 0.5;
  double fwd_r = 0.0, fwd_l = 0.0;
  double elbow_r = 0.3, elbow_l = 0.3;
};

BodyParams lerp(const BodyParams& a, const BodyParams& b, double w) {
  const auto m = [w](double x, double y) { return x + w * (y - x); };
  return {m(a.lean, b.lean),       m(a.head_tilt, b.head_tilt),
          m(a.crouch, b.crouch),   m(a.cross, b.cross),
          m(a.swing_r, b.swing_r), m(a.swing_l, b.swing_l),
          m(a.knee_r, b.knee_r),   m(a.knee_l, b.knee_l),
          m(a.abd_r, b.abd_r),     m(a.abd_l, b.abd_l),
          m(a.fwd_r, b.fwd_r),     m(a.fwd_l, b.fwd_l),
          m(a.elbow_r, b.elbow_r), m(a.elbow_l, b.elbow_l)};
}

std::array<Vec3, 17> build_body(const BodyParams& p, double s) {
  std::array<Vec3, 17> j{};
  const double hip_h = 900.0 * s * (1.0 - p.crouch);
  j[0] = {0.0, 0.0, hip_h};
  const auto leg = [&](int side, double swing, double knee, int hip, int kn,
                       int an) {
    j[hip] = {side * 95.0 * s * (1.0 - p.cross), 0.0, hip_h};
    const Vec3 thigh{0.0, std::sin(swing), -std::cos(swing)};
    j[kn] = add(j[hip], scale(thigh, 430.0 * s));
    const Vec3 shin{0.0, std::sin(swing - knee), -std::cos(swing - knee)};
    j[an] = add(j[kn], scale(shin, 430.0 * s));
  };
  leg(+1, p.swing_r, p.knee_r, 1, 2, 3);
  leg(-1, p.swing_l, p.knee_l, 4, 5, 6);

  const Vec3 up{0.0, std::sin(p.lean), std::cos(p.lean)};
  j[7] = add(j[0], scale(up, 230.0 * s));
  j[8] = add(j[0], scale(up, 480.0 * s));
  j[9] = add(j[0], scale(up, 560.0 * s));
  const Vec3 head{0.0, std::sin(p.lean + p.head_tilt),
                  std::cos(p.lean + p.head_tilt)};
  j[10] = add(j[9], scale(head, 130.0 * s));

  const auto arm = [&](int side, double abd, double fwd, double elbow, int sh,
                       int el, int wr) {
    j[sh] = add(j[8], {side * 170.0 * s, 0.0, -30.0 * s});
    const Vec3 upper = normalized({side * std::sin(abd) * std::cos(fwd),
                                   std::sin(fwd),
                                   -std::cos(abd) * std::cos(fwd)});
    j[el] = add(j[sh], scale(upper, 280.0 * s));
    const Vec3 inward = normalized({-side * 0.5, 0.8, 0.3});
    const Vec3 fore = normalized(
        add(scale(upper, std::cos(elbow)), scale(inward, std::sin(elbow))));
    j[wr] = add(j[el], scale(fore, 250.0 * s));
  };
  arm(-1, p.abd_l, p.fwd_l, p.elbow_l, 11, 12, 13);
  arm(+1, p.abd_r, p.fwd_r, p.elbow_r, 14, 15, 16);
  return j;
}

BodyParams entry_params(JumpType t) {
  BodyParams p;
  switch (t) {
    case JumpType::Axel:
      p.lean = 0.45; p.swing_r = 0.5; p.knee_l = 0.5;
      p.abd_l = 0.3; p.fwd_l = -0.7; p.abd_r = 0.3; p.fwd_r = -0.7;
      p.elbow_l = p.elbow_r = 0.2;
      break;
    case JumpType::Salchow:
      p.lean = 0.15; p.swing_l = -0.6; p.knee_r = 0.6;
      p.abd_l = 1.2; p.fwd_l = 0.6; p.abd_r = 0.9; p.fwd_r = -0.3;
      break;
    case JumpType::Toeloop:
      p.lean = 0.35; p.swing_r = -0.9; p.knee_l = 0.5;
      p.abd_l = 0.8; p.fwd_l = 0.9; p.abd_r = 0.2; p.fwd_r = 0.0;
      break;
    case JumpType::Loop:
      p.lean = 0.1; p.cross = 0.6; p.knee_r = 0.5; p.knee_l = 0.5;
      p.abd_l = 0.5; p.fwd_l = 1.1; p.abd_r = 0.5; p.fwd_r = 1.1;
      break;
    case JumpType::Flip:
      p.lean = 0.3; p.swing_l = -1.0; p.knee_r = 0.3;
      p.abd_l = 1.4; p.fwd_l = 0.0; p.abd_r = 0.6; p.fwd_r = 1.0;
      break;
    case JumpType::Lutz:
      p.lean = 0.5; p.swing_l = -1.1; p.knee_r = 0.6; p.head_tilt = 0.3;
      p.abd_l = 0.7; p.fwd_l = -0.2; p.abd_r = 1.5; p.fwd_r = -0.5;
      break;
  }
  return p;
}

BodyParams air_params(JumpType t) {
  BodyParams p;
  p.knee_r = p.knee_l = 0.05;
  p.cross = 0.8;
  p.abd_l = p.abd_r = 0.15;
  p.fwd_l = p.fwd_r = 1.0;
  p.elbow_l = p.elbow_r = 1.5;
  const int k = static_cast<int>(t);
  // Per-type variation of the tuck: head, arm height and leg wrap.
  p.head_tilt = -0.35 + 0.14 * k;
  p.fwd_l += 0.12 * ((k % 3) - 1);
  p.fwd_r -= 0.12 * ((k % 2) ? 1 : -1);
  p.swing_r = 0.1 * ((k / 2) - 1);
  return p;
}

BodyParams landing_params() {
  BodyParams p;
  p.lean = 0.35;
  p.knee_r = 0.55;
  p.swing_r = 0.1;
  p.swing_l = -1.2;
  p.abd_l = p.abd_r = 1.45;
  p.fwd_l = p.fwd_r = 0.25;
  p.elbow_l = p.elbow_r = 0.1;
  return p;
}

BodyParams stroke_params(double phase, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  BodyParams p;
  p.lean = 0.25 + 0.5 * jitter(rng);
  p.knee_r = p.knee_l = 0.25;
  p.swing_r = 0.35 * std::sin(phase);
  p.swing_l = -p.swing_r;
  p.abd_l = 0.6 + jitter(rng);
  p.abd_r = 0.6 + jitter(rng);
  p.fwd_l = 0.2 + jitter(rng);
  p.fwd_r = 0.2 + jitter(rng);
  return p;
}

int sample_rotations(JumpType t, std::mt19937_64& rng) {
  if (t == JumpType::Axel) {
    std::discrete_distribution<int> d({1.0, 4.0, 4.0});
    return d(rng) + 1;
  }
  std::discrete_distribution<int> d({1.0, 3.0, 6.0, 2.0});
  return d(rng) + 1;
}

// Frame-by-frame body state accumulated by the generator.
struct Track {
  std::vector<BodyParams> body;
  std::vector<double> yaw;
  std::vector<double> lift;  // vertical offset in mm
  double heading = 0.0;

  void push(const BodyParams& p, double yaw_step, double lift_mm = 0.0) {
    heading += yaw_step;
    body.push_back(p);
    yaw.push_back(heading);
    lift.push_back(lift_mm);
  }
};

std::size_t frames_for(double seconds, double fps) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds * fps)));
}

}  // namespace

SyntheticSequence generate_synthetic_sequence(const SyntheticConfig& config,
                                              std::mt19937_64& rng,
                                              const std::string& sequence_id,
                                              const std::string& competition_id) {
  if (!(config.fps > 0.0)) throw RangeError("synthetic fps must be positive");
  if (config.min_jumps > config.max_jumps)
    throw RangeError("min_jumps exceeds max_jumps");
  const double fps = config.fps;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::uniform_int_distribution<int> type_dist(0, 5);

  Track track;
  track.heading = uniform(-kPi, kPi);
  double stroke_phase = 0.0;
  std::vector<Segment> segments;

  const auto background = [&](double seconds) {
    const std::size_t n = frames_for(seconds, fps);
    const double turn_rate = uniform(-0.6, 0.6) / fps;
    const double stride = uniform(1.2, 1.8) * 2.0 * kPi / fps;
    for (std::size_t i = 0; i < n; ++i) {
      stroke_phase += stride;
      track.push(stroke_params(stroke_phase, rng), turn_rate);
    }
  };
  const auto phase = [&](const BodyParams& from, const BodyParams& to,
                         std::size_t n, double yaw_total, double lift_peak) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
      const double lift = lift_peak * 4.0 * u * (1.0 - u);
      track.push(lerp(from, to, 0.6 + 0.4 * u), yaw_total / n, lift);
    }
  };
  const auto airborne = [&](JumpType type) {
    const int rotations = sample_rotations(type, rng);
    const double turns = rotations + (type == JumpType::Axel ? 0.5 : 0.0);
    const double seconds = 0.42 + 0.07 * rotations +
                           (type == JumpType::Axel ? 0.05 : 0.0) +
                           uniform(-0.03, 0.03);
    const std::size_t start = track.body.size();
    const std::size_t n = frames_for(seconds, fps);
    const BodyParams air = air_params(type);
    phase(air, air, n, 2.0 * kPi * turns, 400.0);
    segments.push_back({Label::element_jump(type, rotations), start, start + n});
  };

  background(uniform(1.5, 3.5));
  const std::size_t jumps =
      std::uniform_int_distribution<std::size_t>(config.min_jumps,
                                                 config.max_jumps)(rng);
  for (std::size_t k = 0; k < jumps; ++k) {
    const auto type = static_cast<JumpType>(type_dist(rng));
    const BodyParams entry = entry_params(type);
    std::size_t start = track.body.size();
    const std::size_t entry_frames = frames_for(uniform(0.8, 1.3), fps);
    phase(lerp(entry, BodyParams{}, 0.3), entry, entry_frames,
          -0.8 * entry_frames / fps, 0.0);
    segments.push_back(
        {Label::entry(Level::Element, type), start, start + entry_frames});

    airborne(type);
    if (unit(rng) < config.combination_probability)
      airborne(unit(rng) < 0.7 ? JumpType::Toeloop : JumpType::Loop);

    start = track.body.size();
    const std::size_t landing_frames = frames_for(uniform(0.5, 0.9), fps);
    phase(landing_params(), landing_params(), landing_frames,
          0.3 * landing_frames / fps, 0.0);
    segments.push_back(
        {Label::landing(Level::Element), start, start + landing_frames});
    background(uniform(1.5, 4.0));
  }

  const std::size_t T = track.body.size();
  const double body_scale = uniform(0.92, 1.08);
  std::normal_distribution<double> noise(0.0, config.noise_mm);
  auto rig = std::make_shared<const JointRig>(JointRig::human36m());
  SyntheticSequence out;
  out.pose = PoseSequence::zeros(rig, 3, fps, T);
  out.pose.meta = {sequence_id, sequence_id, competition_id};
  double x = 0.0, y = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto body = build_body(track.body[t], body_scale);
    const double c = std::cos(track.yaw[t]), s = std::sin(track.yaw[t]);
    // Glide along the current facing direction (+Y rotated by yaw).
    x += -s * 3000.0 / fps;
    y += c * 3000.0 / fps;
    for (std::size_t j = 0; j < 17; ++j) {
      auto p = out.pose.joint(t, j);
      const Vec3& b = body[j];
      p[0] = x + c * b[0] - s * b[1] + noise(rng);
      p[1] = y + s * b[0] + c * b[1] + noise(rng);
      p[2] = b[2] + track.lift[t] + noise(rng);
    }
  }

  out.annotation.sequence_id = sequence_id;
  out.annotation.level = Level::Element;
  out.annotation.total_frames = T;
  out.annotation.segments = std::move(segments);
  return out;
}

std::vector<SyntheticSequence> generate_synthetic_corpus(
    const SyntheticConfig& config) {
  if (config.competitions == 0) throw RangeError("need at least one competition");
  std::mt19937_64 rng(config.seed);
  std::vector<SyntheticSequence> out;
  out.reserve(config.sequences);
  for (std::size_t i = 0; i < config.sequences; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "seq%03zu", i);
    out.push_back(generate_synthetic_sequence(
        config, rng, id, "comp" + std::to_string(i % config.competitions)));
  }
  return out;
}

RigMapping synthetic_keypoint_mapping() {
  RigMapping m;
  m.source_keypoint_count = kFsJump3dKeypoints;
  m.target_rig = "h36m";
  for (std::size_t j = 0; j < 17; ++j) m.rules.push_back({2 * j, 2 * j + 1});
  return m;
}

MocapRecording expand_to_keypoints(const PoseSequence& pose,
                                   std::uint64_t seed) {
  if (pose.dims != 3 || pose.joint_count() != 17)
    throw DimensionError("keypoint expansion needs a 3D 17-joint sequence");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-30.0, 30.0);
  std::uniform_int_distribution<std::size_t> pick(0, 16);
  std::array<Vec3, 17> straddle{};
  for (auto& o : straddle) o = {offset(rng), offset(rng), offset(rng)};
  struct Distractor {
    std::size_t joint;
    Vec3 offset;
  };
  std::vector<Distractor> distractors;
  for (std::size_t k = 34; k < kFsJump3dKeypoints; ++k)
    distractors.push_back({pick(rng), {offset(rng), offset(rng), offset(rng)}});

  MocapRecording rec;
  rec.fps = pose.fps;
  rec.keypoint_count = kFsJump3dKeypoints;
  rec.frame_count = pose.frame_count;
  rec.meta = pose.meta;
  rec.positions.reserve(rec.frame_count * rec.keypoint_count * 3);
  for (std::size_t t = 0; t < pose.frame_count; ++t) {
    for (std::size_t j = 0; j < 17; ++j) {
      const auto p = pose.joint(t, j);
      for (int a = 0; a < 3; ++a) rec.positions.push_back(p[a] + straddle[j][a]);
      for (int a = 0; a < 3; ++a) rec.positions.push_back(p[a] - straddle[j][a]);
    }
    for (const auto& d : distractors) {
      const auto p = pose.joint(t, d.joint);
      for (int a = 0; a < 3; ++a) rec.positions.push_back(p[a] + d.offset[a]);
    }
  }
  return rec;
}

}  // namespace fsjump

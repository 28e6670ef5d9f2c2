#include "fsjump/io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fsjump/error.hpp"

namespace fsjump {

namespace fs = std::filesystem;

namespace {

std::string describe_parse_error(const std::string& text,
                                 const nlohmann::json::parse_error& e) {
  std::size_t line = 1, col = 1;
  const std::size_t limit = std::min<std::size_t>(e.byte, text.size());
  for (std::size_t i = 0; i + 1 < limit; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col) +
         " (byte " + std::to_string(e.byte) + "): " + e.what();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, double value) {
  const float f = static_cast<float>(value);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size())
      throw ParseError("truncated binary pose file at offset " +
                       std::to_string(pos_));
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(
        bytes_[pos_] | (static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return static_cast<double>(f);
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json pose_header(const PoseSequence& seq) {
  nlohmann::json h = {{"rig", seq.rig->name()},
                      {"dims", seq.dims},
                      {"fps", seq.fps},
                      {"units", to_string(seq.units)},
                      {"T", seq.frame_count},
                      {"J", seq.joint_count()},
                      {"meta",
                       {{"sequence_id", seq.meta.sequence_id},
                        {"competition_id", seq.meta.competition_id}}}};
  if (!seq.meta.source_video_id.empty())
    h["meta"]["source_video_id"] = seq.meta.source_video_id;
  if (seq.rig->name() != JointRig::human36m().name() ||
      *seq.rig != JointRig::human36m())
    h["rig_definition"] = seq.rig->to_json();
  return h;
}

std::shared_ptr<const JointRig> rig_from_header(const nlohmann::json& h) {
  if (h.contains("rig_definition"))
    return std::make_shared<const JointRig>(
        JointRig::from_json(h.at("rig_definition")));
  return std::make_shared<const JointRig>(
      resolve_rig(h.at("rig").get<std::string>()));
}

void apply_header(PoseSequence& seq, const nlohmann::json& h) {
  seq.rig = rig_from_header(h);
  seq.dims = h.at("dims").get<int>();
  if (seq.dims != 2 && seq.dims != 3)
    throw DimensionError("dims must be 2 or 3, got " +
                         std::to_string(seq.dims));
  seq.fps = h.at("fps").get<double>();
  seq.units = parse_units(h.value("units", std::string("mm")));
  if (h.contains("meta")) {
    const auto& m = h.at("meta");
    seq.meta.sequence_id = m.value("sequence_id", std::string());
    seq.meta.competition_id = m.value("competition_id", std::string());
    seq.meta.source_video_id = m.value("source_video_id", std::string());
  }
  if (h.contains("J") &&
      h.at("J").get<std::size_t>() != seq.rig->joint_count())
    throw DimensionError("file declares J=" +
                         std::to_string(h.at("J").get<std::size_t>()) +
                         " but rig '" + seq.rig->name() + "' has " +
                         std::to_string(seq.rig->joint_count()) + " joints");
}

double finite_number(const nlohmann::json& v, std::size_t t) {
  if (!v.is_number())
    throw RangeError("non-numeric or non-finite coordinate at frame " +
                     std::to_string(t));
  const double d = v.get<double>();
  if (!std::isfinite(d))
    throw RangeError("non-finite coordinate at frame " + std::to_string(t));
  return d;
}

}  // namespace

PoseFormat parse_pose_format(const std::string& text) {
  if (text == "json") return PoseFormat::Json;
  if (text == "binary" || text == "bin") return PoseFormat::Binary;
  throw ParseError("unknown pose format '" + text + "'");
}

nlohmann::json read_json_file(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " +
                     describe_parse_error(text, e));
  }
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw IoError("cannot write '" + path.string() + "'");
  std::size_t written = 0;
  while (written < contents.size()) {
    const ssize_t n =
        ::write(fd, contents.data() + written, contents.size() - written);
    if (n <= 0) {
      ::close(fd);
      ::unlink(tmp.c_str());
      throw IoError("short write to '" + tmp.string() + "'");
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

nlohmann::json pose_to_json(const PoseSequence& seq) {
  seq.validate();
  nlohmann::json j = pose_header(seq);
  j.erase("T");
  j.erase("J");
  const std::size_t J = seq.joint_count();
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t t = 0; t < seq.frame_count; ++t) {
    nlohmann::json frame = nlohmann::json::array();
    for (std::size_t k = 0; k < J; ++k) {
      const auto p = seq.joint(t, k);
      frame.push_back(std::vector<double>(p.begin(), p.end()));
    }
    frames.push_back(std::move(frame));
  }
  j["frames"] = std::move(frames);
  if (seq.confidence) {
    nlohmann::json conf = nlohmann::json::array();
    for (std::size_t t = 0; t < seq.frame_count; ++t)
      conf.push_back(std::vector<double>(
          seq.confidence->begin() + static_cast<std::ptrdiff_t>(t * J),
          seq.confidence->begin() + static_cast<std::ptrdiff_t>((t + 1) * J)));
    j["confidence"] = std::move(conf);
  }
  if (seq.mask) {
    nlohmann::json mask = nlohmann::json::array();
    for (std::size_t t = 0; t < seq.frame_count; ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t k = 0; k < J; ++k) row.push_back(seq.valid(t, k));
      mask.push_back(std::move(row));
    }
    j["mask"] = std::move(mask);
  }
  return j;
}

PoseSequence pose_from_json(const nlohmann::json& j) {
  PoseSequence seq;
  try {
    apply_header(seq, j);
    const std::size_t J = seq.rig->joint_count();
    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.empty())
      throw DimensionError("pose file has no frames");
    seq.frame_count = frames.size();
    seq.coords.reserve(seq.frame_count * J * seq.dims);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const auto& frame = frames[t];
      if (!frame.is_array() || frame.size() != J)
        throw DimensionError("frame " + std::to_string(t) + " has " +
                             std::to_string(frame.size()) +
                             " joints, rig expects " + std::to_string(J));
      for (const auto& p : frame) {
        if (!p.is_array() || p.size() != static_cast<std::size_t>(seq.dims))
          throw DimensionError("frame " + std::to_string(t) +
                               ": joint has wrong coordinate count");
        for (const auto& v : p) seq.coords.push_back(finite_number(v, t));
      }
    }
    if (j.contains("confidence") && !j.at("confidence").is_null()) {
      const auto& conf = j.at("confidence");
      if (conf.size() != seq.frame_count)
        throw DimensionError("confidence has " + std::to_string(conf.size()) +
                             " frames, expected " +
                             std::to_string(seq.frame_count));
      std::vector<double> c;
      c.reserve(seq.frame_count * J);
      for (std::size_t t = 0; t < conf.size(); ++t) {
        if (conf[t].size() != J)
          throw DimensionError("confidence frame " + std::to_string(t) +
                               " has wrong joint count");
        for (const auto& v : conf[t]) c.push_back(finite_number(v, t));
      }
      seq.confidence = std::move(c);
    }
    if (j.contains("mask") && !j.at("mask").is_null()) {
      const auto& m = j.at("mask");
      if (m.size() != seq.frame_count)
        throw DimensionError("mask has wrong frame count");
      std::vector<bool> mask;
      mask.reserve(seq.frame_count * J);
      for (const auto& row : m) {
        if (row.size() != J) throw DimensionError("mask row has wrong size");
        for (const auto& v : row) mask.push_back(v.get<bool>());
      }
      seq.mask = std::move(mask);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pose file: ") + e.what());
  }
  seq.validate();
  return seq;
}

std::vector<std::uint8_t> encode_pose_binary(const PoseSequence& seq) {
  seq.validate();
  nlohmann::json header = pose_header(seq);
  header["has_confidence"] = seq.confidence.has_value();
  header["has_mask"] = seq.mask.has_value();
  const std::string h = header.dump();

  std::vector<std::uint8_t> out(std::begin(kPoseMagic), std::end(kPoseMagic));
  put_u16(out, kPoseBinaryVersion);
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out.insert(out.end(), h.begin(), h.end());
  out.reserve(out.size() + seq.coords.size() * 4);
  for (double v : seq.coords) put_f32(out, v);
  if (seq.confidence)
    for (double c : *seq.confidence) put_f32(out, c);
  if (seq.mask)
    for (bool b : *seq.mask) out.push_back(b ? 1 : 0);
  return out;
}

PoseSequence decode_pose_binary(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  if (r.str(4) != std::string(kPoseMagic, 4))
    throw ParseError("not a binary pose file (bad magic)");
  const auto version = r.u16();
  if (version != kPoseBinaryVersion)
    throw ParseError("unsupported binary pose version " +
                     std::to_string(version));
  const auto header_len = r.u32();
  const std::size_t header_offset = r.offset();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str(header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("binary pose header at offset " +
                     std::to_string(header_offset + e.byte) + ": " + e.what());
  }
  PoseSequence seq;
  try {
    apply_header(seq, header);
    seq.frame_count = header.at("T").get<std::size_t>();
    if (seq.frame_count < 1) throw DimensionError("pose file has no frames");
    const std::size_t cells = seq.frame_count * seq.rig->joint_count();
    seq.coords.resize(cells * seq.dims);
    for (auto& v : seq.coords) v = r.f32();
    if (header.value("has_confidence", false)) {
      std::vector<double> c(cells);
      for (auto& v : c) v = r.f32();
      seq.confidence = std::move(c);
    }
    if (header.value("has_mask", false)) {
      std::vector<bool> m(cells);
      for (std::size_t i = 0; i < cells; ++i) m[i] = r.u8() != 0;
      seq.mask = std::move(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("binary pose header: ") + e.what());
  }
  if (!r.done())
    throw ParseError("trailing bytes after pose payload at offset " +
                     std::to_string(r.offset()));
  seq.validate();
  return seq;
}

PoseSequence load_pose_sequence(const fs::path& path) {
  const std::string text = read_text(path);
  if (text.size() >= 4 && text.compare(0, 4, kPoseMagic, 4) == 0)
    return decode_pose_binary(std::vector<std::uint8_t>(text.begin(), text.end()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " +
                     describe_parse_error(text, e));
  }
  return pose_from_json(j);
}

void save_pose_sequence(const PoseSequence& seq, const fs::path& path,
                        PoseFormat format) {
  if (format == PoseFormat::Json) {
    write_file_atomic(path, pose_to_json(seq).dump());
  } else {
    const auto bytes = encode_pose_binary(seq);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
  }
}

MocapRecording load_mocap(const fs::path& path) {
  const auto j = read_json_file(path);
  MocapRecording rec;
  try {
    rec.fps = j.at("fps").get<double>();
    const std::string units = j.value("units", std::string("mm"));
    double scale = 1.0;
    if (units == "m")
      scale = 1000.0;
    else if (units != "mm")
      throw ParseError("mocap units must be mm or m, got '" + units + "'");
    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.empty())
      throw DimensionError("mocap file has no frames");
    rec.frame_count = frames.size();
    rec.keypoint_count = j.contains("keypoint_count")
                             ? j.at("keypoint_count").get<std::size_t>()
                             : frames[0].size();
    rec.positions.reserve(rec.frame_count * rec.keypoint_count * 3);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (frames[t].size() != rec.keypoint_count)
        throw DimensionError("mocap frame " + std::to_string(t) + " has " +
                             std::to_string(frames[t].size()) +
                             " keypoints, expected " +
                             std::to_string(rec.keypoint_count));
      for (const auto& p : frames[t]) {
        if (p.size() != 3)
          throw DimensionError("mocap keypoint must have 3 coordinates");
        for (const auto& v : p)
          rec.positions.push_back(finite_number(v, t) * scale);
      }
    }
    if (j.contains("meta")) {
      const auto& m = j.at("meta");
      rec.meta.sequence_id = m.value("sequence_id", std::string());
      rec.meta.competition_id = m.value("competition_id", std::string());
      rec.meta.source_video_id = m.value("source_video_id", std::string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("mocap file '" + path.string() + "': " + e.what());
  }
  return rec;
}

nlohmann::json mocap_to_json(const MocapRecording& rec) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t t = 0; t < rec.frame_count; ++t) {
    nlohmann::json frame = nlohmann::json::array();
    for (std::size_t k = 0; k < rec.keypoint_count; ++k) {
      const double* p = rec.positions.data() + (t * rec.keypoint_count + k) * 3;
      frame.push_back({p[0], p[1], p[2]});
    }
    frames.push_back(std::move(frame));
  }
  return {{"fps", rec.fps},
          {"units", "mm"},
          {"keypoint_count", rec.keypoint_count},
          {"meta",
           {{"sequence_id", rec.meta.sequence_id},
            {"competition_id", rec.meta.competition_id}}},
          {"frames", std::move(frames)}};
}

void RigMapping::validate(const JointRig& target) const {
  if (rules.size() != target.joint_count())
    throw DimensionError("rig mapping has " + std::to_string(rules.size()) +
                         " rules, target rig '" + target.name() + "' has " +
                         std::to_string(target.joint_count()) + " joints");
  for (std::size_t j = 0; j < rules.size(); ++j) {
    if (rules[j].empty())
      throw DimensionError("rig mapping: joint '" + target.joint_names()[j] +
                           "' has no source");
    for (std::size_t s : rules[j])
      if (s >= source_keypoint_count)
        throw RangeError("rig mapping: joint '" + target.joint_names()[j] +
                         "' references source index " + std::to_string(s) +
                         " >= " + std::to_string(source_keypoint_count));
  }
}

nlohmann::json RigMapping::to_json(const JointRig& target) const {
  nlohmann::json r = nlohmann::json::array();
  for (std::size_t j = 0; j < rules.size(); ++j)
    r.push_back({{"joint", target.joint_names().at(j)}, {"sources", rules[j]}});
  return {{"source_keypoint_count", source_keypoint_count},
          {"target_rig", target_rig},
          {"rules", r}};
}

RigMapping RigMapping::from_json(const nlohmann::json& j,
                                 const JointRig& target) {
  RigMapping m;
  try {
    m.source_keypoint_count = j.at("source_keypoint_count").get<std::size_t>();
    m.target_rig = j.value("target_rig", target.name());
    m.rules.assign(target.joint_count(), {});
    std::vector<bool> seen(target.joint_count(), false);
    for (const auto& rule : j.at("rules")) {
      const auto name = rule.at("joint").get<std::string>();
      const auto idx = target.find(name);
      if (!idx)
        throw ParseError("rig mapping: unknown target joint '" + name + "'");
      if (seen[*idx])
        throw ParseError("rig mapping: joint '" + name + "' has two rules");
      seen[*idx] = true;
      const auto& src = rule.at("sources");
      if (src.is_number())
        m.rules[*idx] = {src.get<std::size_t>()};
      else
        m.rules[*idx] = src.get<std::vector<std::size_t>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rig mapping: ") + e.what());
  }
  m.validate(target);
  return m;
}

RigMapping RigMapping::load(const fs::path& path, const JointRig& target) {
  return from_json(read_json_file(path), target);
}

PoseSequence ingest_fsjump3d(const MocapRecording& rec,
                             const RigMapping& mapping,
                             const JointRig& target) {
  if (rec.keypoint_count != kFsJump3dKeypoints)
    throw DimensionError("capture has " + std::to_string(rec.keypoint_count) +
                         " keypoints, expected " +
                         std::to_string(kFsJump3dKeypoints));
  if (mapping.source_keypoint_count != rec.keypoint_count)
    throw DimensionError("rig mapping expects " +
                         std::to_string(mapping.source_keypoint_count) +
                         " source keypoints, capture has " +
                         std::to_string(rec.keypoint_count));
  mapping.validate(target);
  if (std::abs(rec.fps - kFsJump3dFps) > 1e-9)
    throw RangeError("capture frame rate " + std::to_string(rec.fps) +
                     " fps, expected 60");

  auto seq = PoseSequence::zeros(std::make_shared<const JointRig>(target), 3,
                                 rec.fps, rec.frame_count);
  seq.units = Units::Millimeters;
  seq.meta = rec.meta;
  for (std::size_t t = 0; t < rec.frame_count; ++t) {
    for (std::size_t j = 0; j < target.joint_count(); ++j) {
      const auto& sources = mapping.rules[j];
      auto out = seq.joint(t, j);
      for (int a = 0; a < 3; ++a) {
        double sum = 0.0;
        for (std::size_t s : sources)
          sum += rec.positions[(t * rec.keypoint_count + s) * 3 + a];
        out[a] = sum / static_cast<double>(sources.size());
      }
    }
  }
  seq.validate();
  return seq;
}

PoseSequence resample(const PoseSequence& seq, double target_fps) {
  if (!(target_fps > 0.0) || !std::isfinite(target_fps))
    throw RangeError("target fps must be positive");
  seq.validate();
  if (target_fps == seq.fps) return seq;

  const double step = seq.fps / target_fps;  // source frames per output frame
  const double rounded_step = std::round(step);
  const bool integer_ratio =
      rounded_step >= 1.0 && std::abs(step - rounded_step) < 1e-9;
  const std::size_t T = seq.frame_count;
  const std::size_t out_frames = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(T) *
                                               target_fps / seq.fps)));

  PoseSequence out = PoseSequence::zeros(seq.rig, seq.dims, target_fps,
                                         out_frames);
  out.units = seq.units;
  out.meta = seq.meta;
  const std::size_t J = seq.joint_count();
  if (seq.confidence) out.confidence.emplace(out_frames * J, 0.0);
  if (seq.mask) out.mask.emplace(out_frames * J, false);

  for (std::size_t i = 0; i < out_frames; ++i) {
    std::size_t lo, hi;
    double w;
    if (integer_ratio) {
      lo = hi = std::min(T - 1, i * static_cast<std::size_t>(rounded_step));
      w = 0.0;
    } else {
      const double pos =
          std::min(static_cast<double>(i) * step, static_cast<double>(T - 1));
      lo = static_cast<std::size_t>(std::floor(pos));
      hi = std::min(lo + 1, T - 1);
      w = pos - static_cast<double>(lo);
    }
    for (std::size_t j = 0; j < J; ++j) {
      const auto a = seq.joint(lo, j);
      const auto b = seq.joint(hi, j);
      auto o = out.joint(i, j);
      const bool valid = seq.valid(lo, j) && (w == 0.0 || seq.valid(hi, j));
      for (int d = 0; d < seq.dims; ++d)
        o[d] = !valid ? 0.0 : (w == 0.0 ? a[d] : a[d] + w * (b[d] - a[d]));
      if (out.mask) (*out.mask)[i * J + j] = valid;
      if (out.confidence) {
        const double ca = (*seq.confidence)[lo * J + j];
        const double cb = (*seq.confidence)[hi * J + j];
        (*out.confidence)[i * J + j] = w == 0.0 ? ca : std::min(ca, cb);
      }
    }
  }
  return out;
}

const ManifestEntry* CorpusManifest::find(const std::string& sequence_id) const {
  for (const auto& e : entries)
    if (e.sequence_id == sequence_id) return &e;
  return nullptr;
}

CorpusManifest CorpusManifest::from_json(const nlohmann::json& j,
                                         fs::path base_dir) {
  CorpusManifest m;
  m.base_dir = std::move(base_dir);
  const auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : m.base_dir / path;
  };
  try {
    const auto& list = j.is_array() ? j : j.at("entries");
    std::set<std::string> ids;
    for (const auto& e : list) {
      ManifestEntry entry;
      entry.sequence_id = e.at("sequence_id").get<std::string>();
      if (!ids.insert(entry.sequence_id).second)
        throw ParseError("manifest: duplicate sequence id '" +
                         entry.sequence_id + "'");
      entry.pose_file = resolve(e.at("pose_file").get<std::string>());
      if (e.contains("annotation_file") && !e.at("annotation_file").is_null())
        entry.annotation_file =
            resolve(e.at("annotation_file").get<std::string>());
      entry.competition_id = e.value("competition_id", std::string());
      entry.split_hint = e.value("split_hint", std::string());
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

CorpusManifest CorpusManifest::load(const fs::path& path, bool check_files) {
  auto m = from_json(read_json_file(path), fs::absolute(path).parent_path());
  if (check_files)
    for (const auto& e : m.entries)
      if (!fs::exists(e.pose_file))
        throw IoError("manifest entry '" + e.sequence_id +
                      "': pose file '" + e.pose_file.string() +
                      "' does not exist");
  return m;
}

nlohmann::json CorpusManifest::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  const auto rel = [&](const fs::path& p) {
    return base_dir.empty() ? p.string() : p.lexically_relative(base_dir).string();
  };
  for (const auto& e : entries) {
    nlohmann::json item = {{"sequence_id", e.sequence_id},
                           {"pose_file", rel(e.pose_file)},
                           {"competition_id", e.competition_id}};
    if (e.annotation_file) item["annotation_file"] = rel(*e.annotation_file);
    if (!e.split_hint.empty()) item["split_hint"] = e.split_hint;
    list.push_back(std::move(item));
  }
  return list;
}

void CorpusManifest::save(const fs::path& path) const {
  write_file_atomic(path, to_json().dump(2));
}

Split split_by_competition(const CorpusManifest& manifest,
                           const std::vector<std::string>& test_competitions,
                           const SplitOptions& options) {
  if (options.val_fraction < 0.0 || options.val_fraction > 1.0)
    throw RangeError("val fraction must lie in [0, 1]");
  std::map<std::string, std::size_t> counts;
  for (const auto& e : manifest.entries) {
    if (e.competition_id.empty())
      throw ParseError("manifest entry '" + e.sequence_id +
                       "' has no competition id");
    ++counts[e.competition_id];
  }
  const std::set<std::string> test(test_competitions.begin(),
                                   test_competitions.end());
  for (const auto& c : test)
    if (!counts.contains(c))
      throw IdMismatchError("test competition '" + c +
                            "' does not occur in the manifest");

  std::vector<std::string> pool;
  std::size_t pool_sequences = 0;
  for (const auto& [c, n] : counts)
    if (!test.contains(c)) {
      pool.push_back(c);
      pool_sequences += n;
    }
  std::mt19937_64 rng(options.seed);
  std::shuffle(pool.begin(), pool.end(), rng);

  const double target = options.val_fraction * static_cast<double>(pool_sequences);
  std::set<std::string> val;
  std::size_t val_sequences = 0;
  for (const auto& c : pool) {
    if (static_cast<double>(val_sequences) >= target) break;
    if (val.size() + 1 >= pool.size()) break;  // keep one competition in train
    val.insert(c);
    val_sequences += counts[c];
  }

  Split split;
  for (const auto& e : manifest.entries) {
    if (test.contains(e.competition_id))
      split.test.push_back(e.sequence_id);
    else if (val.contains(e.competition_id))
      split.val.push_back(e.sequence_id);
    else
      split.train.push_back(e.sequence_id);
  }
  return split;
}

FrameLabels import_external_predictions(const fs::path& path,
                                        const LabelTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions '" + path.string() + "'");
  FrameLabels out{taxonomy.level(), {}};
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t'))
      line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    try {
      out.labels.push_back(taxonomy.id_of(line));
    } catch (const UnknownLabelError&) {
      throw UnknownLabelError("'" + path.string() + "' row " +
                              std::to_string(row) + ": unknown label '" + line +
                              "'");
    }
  }
  return out;
}

void write_frame_labels(const FrameLabels& labels,
                        const LabelTaxonomy& taxonomy, const fs::path& path) {
  std::string text;
  for (LabelId id : labels.labels) {
    text += taxonomy.label(id).name();
    text += '\n';
  }
  write_file_atomic(path, text);
}

}  // namespace fsjump

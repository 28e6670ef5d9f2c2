#include "fsjump/service.hpp"

#include <charconv>
#include <list>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <utility>

#include <httplib.h>

#include "fsjump/annotation.hpp"
#include "fsjump/error.hpp"
#include "fsjump/io.hpp"
#include "fsjump/preprocess.hpp"

namespace fsjump {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ServiceResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

json violations_json(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const auto& v : violations) out.push_back(v.to_json());
  return out;
}

std::optional<std::size_t> parse_index(const std::string& text) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

struct SequenceState {
  ManifestEntry entry;
  std::size_t frame_count = 0;
  double fps = 0.0;
  fs::path annotation_path;

  mutable std::shared_mutex lock;
  bool annotated = false;
  SequenceAnnotation annotation;
  ValidationMode mode = ValidationMode::Strict;
};

struct AnnotationService::Impl {
  ServiceOptions options;
  CorpusManifest manifest;
  std::map<std::string, std::unique_ptr<SequenceState>> sequences;

  // LRU of loaded pose sequences, most recent at the front.
  mutable std::mutex cache_mutex;
  mutable std::list<std::pair<std::string, std::shared_ptr<const PoseSequence>>>
      cache;
  mutable std::unordered_map<std::string, decltype(cache)::iterator> cache_index;

  httplib::Server server;

  SequenceState* find(const std::string& id) const {
    auto it = sequences.find(id);
    return it == sequences.end() ? nullptr : it->second.get();
  }

  std::shared_ptr<const PoseSequence> pose(const SequenceState& state) const {
    {
      std::lock_guard guard(cache_mutex);
      auto it = cache_index.find(state.entry.sequence_id);
      if (it != cache_index.end()) {
        cache.splice(cache.begin(), cache, it->second);
        return it->second->second;
      }
    }
    // Load outside the lock; a racing loader just does redundant work.
    auto loaded = std::make_shared<const PoseSequence>(
        load_pose_sequence(state.entry.pose_file));
    std::lock_guard guard(cache_mutex);
    auto it = cache_index.find(state.entry.sequence_id);
    if (it != cache_index.end()) return it->second->second;
    if (options.pose_cache_size == 0) return loaded;
    cache.emplace_front(state.entry.sequence_id, loaded);
    cache_index[state.entry.sequence_id] = cache.begin();
    while (cache.size() > options.pose_cache_size) {
      cache_index.erase(cache.back().first);
      cache.pop_back();
    }
    return loaded;
  }

  void persist(const SequenceState& state, const SequenceAnnotation& annotation,
               ValidationMode mode) const {
    json j = annotation.to_json();
    j["validation_mode"] = to_string(mode);
    std::filesystem::create_directories(state.annotation_path.parent_path());
    write_file_atomic(state.annotation_path, j.dump(2) + "\n");
  }
};

AnnotationService::AnnotationService(ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->manifest = CorpusManifest::load(impl_->options.manifest);
  const fs::path annotation_dir = impl_->options.annotation_dir.value_or(
      impl_->manifest.base_dir / "annotations");

  for (const auto& entry : impl_->manifest.entries) {
    auto state = std::make_unique<SequenceState>();
    state->entry = entry;
    const auto pose = impl_->pose(*state);
    state->frame_count = pose->frame_count;
    state->fps = pose->fps;
    state->annotation_path = entry.annotation_file.value_or(
        annotation_dir / (entry.sequence_id + ".json"));

    if (fs::exists(state->annotation_path)) {
      const json j = read_json_file(state->annotation_path);
      state->annotation = SequenceAnnotation::from_json(j);
      if (j.contains("validation_mode")) {
        state->mode = parse_validation_mode(j.at("validation_mode").get<std::string>());
      }
      if (state->annotation.sequence_id != entry.sequence_id) {
        throw IdMismatchError("annotation " + state->annotation_path.string() +
                              " belongs to '" + state->annotation.sequence_id +
                              "', expected '" + entry.sequence_id + "'");
      }
      if (state->annotation.total_frames != state->frame_count) {
        throw IdMismatchError("annotation for '" + entry.sequence_id + "' has " +
                              std::to_string(state->annotation.total_frames) +
                              " frames, pose file has " +
                              std::to_string(state->frame_count));
      }
      state->annotated = true;
    } else {
      state->annotation.sequence_id = entry.sequence_id;
      state->annotation.level = impl_->options.default_level;
      state->annotation.total_frames = state->frame_count;
    }
    if (!impl_->sequences.emplace(entry.sequence_id, std::move(state)).second) {
      throw ParseError("duplicate sequence id in manifest: " + entry.sequence_id);
    }
  }

  auto& server = impl_->server;
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto param = [](const httplib::Request& req,
                  const char* key) -> std::optional<std::string> {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  };

  server.Get("/api/sequences",
             [this, reply](const httplib::Request&, httplib::Response& res) {
               reply(res, list_sequences());
             });
  server.Get(R"(/api/sequences/([^/]+)/poses)",
             [this, reply, param](const httplib::Request& req,
                                  httplib::Response& res) {
               const auto aligned = param(req, "aligned");
               reply(res, get_poses(req.matches[1], param(req, "from"),
                                    param(req, "to"),
                                    aligned && (*aligned == "true" || *aligned == "1")));
             });
  server.Get(R"(/api/sequences/([^/]+)/annotation)",
             [this, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, get_annotation(req.matches[1]));
             });
  server.Put(R"(/api/sequences/([^/]+)/annotation)",
             [this, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, put_annotation(req.matches[1], req.body));
             });
  server.Post("/api/validate",
              [this, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, validate_annotation(req.body));
              });
  server.Get("/api/taxonomy", [this, reply, param](const httplib::Request& req,
                                                   httplib::Response& res) {
    reply(res, taxonomy(param(req, "level").value_or("set")));
  });
  server.Get("/api/stats",
             [this, reply](const httplib::Request&, httplib::Response& res) {
               reply(res, stats());
             });
  server.set_exception_handler(
      [reply](const httplib::Request&, httplib::Response& res,
              std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const Error& e) {
          reply(res, error_response(422, e.what()));
        } catch (const std::exception& e) {
          reply(res, error_response(500, e.what()));
        }
      });
  if (impl_->options.ui_dir) {
    if (!server.set_mount_point("/", impl_->options.ui_dir->string())) {
      throw IoError("UI directory not found: " + impl_->options.ui_dir->string());
    }
  }
}

AnnotationService::~AnnotationService() { stop(); }

ServiceResponse AnnotationService::list_sequences() const {
  json out = json::array();
  for (const auto& [id, state] : impl_->sequences) {
    std::shared_lock guard(state->lock);
    out.push_back({{"id", id},
                   {"frame_count", state->frame_count},
                   {"fps", state->fps},
                   {"competition_id", state->entry.competition_id},
                   {"annotated", state->annotated},
                   {"version", state->annotation.version}});
  }
  return {200, json{{"sequences", out}}};
}

ServiceResponse AnnotationService::get_poses(const std::string& id,
                                             const std::optional<std::string>& from,
                                             const std::optional<std::string>& to,
                                             bool aligned) const {
  const SequenceState* state = impl_->find(id);
  if (!state) return error_response(404, "unknown sequence: " + id);

  std::size_t begin = 0;
  std::size_t end = state->frame_count;
  if (from) {
    auto v = parse_index(*from);
    if (!v) return error_response(422, "invalid 'from': " + *from);
    begin = *v;
  }
  if (to) {
    auto v = parse_index(*to);
    if (!v) return error_response(422, "invalid 'to': " + *to);
    end = *v;
  }
  if (begin > end) return error_response(422, "'from' exceeds 'to'");
  if (end > state->frame_count) {
    return error_response(422, "'to' exceeds frame count " +
                                   std::to_string(state->frame_count));
  }

  auto pose = impl_->pose(*state);
  if (aligned) {
    PoseSequence prepared = center_root(
        pose->confidence ? mask_low_confidence(*pose) : *pose);
    pose = std::make_shared<const PoseSequence>(
        align_pose_sequence(prepared).aligned);
  }

  const auto& rig = *pose->rig;
  const std::size_t joints = pose->joint_count();
  const auto dims = static_cast<std::size_t>(pose->dims);
  json frames = json::array();
  json mask = json::array();
  for (std::size_t t = begin; t < end; ++t) {
    json frame = json::array();
    json frame_mask = json::array();
    for (std::size_t j = 0; j < joints; ++j) {
      const auto p = pose->joint(t, j);
      frame.push_back(std::vector<double>(p.begin(), p.begin() + dims));
      frame_mask.push_back(pose->valid(t, j));
    }
    frames.push_back(std::move(frame));
    mask.push_back(std::move(frame_mask));
  }
  json joint_names = json::array();
  json parents = json::array();
  for (std::size_t j = 0; j < joints; ++j) {
    joint_names.push_back(rig.joint_names()[j]);
    const auto& parent = rig.parent()[j];
    parents.push_back(parent ? json(*parent) : json(nullptr));
  }
  return {200, json{{"sequence_id", id},
                    {"from", begin},
                    {"to", end},
                    {"fps", pose->fps},
                    {"dims", pose->dims},
                    {"units", to_string(pose->units)},
                    {"aligned", aligned},
                    {"joint_names", joint_names},
                    {"parents", parents},
                    {"frames", frames},
                    {"valid", mask}}};
}

ServiceResponse AnnotationService::get_annotation(const std::string& id) const {
  const SequenceState* state = impl_->find(id);
  if (!state) return error_response(404, "unknown sequence: " + id);
  std::shared_lock guard(state->lock);
  json out = state->annotation.to_json();
  out["annotated"] = state->annotated;
  out["validation_mode"] = to_string(state->mode);
  return {200, out};
}

ServiceResponse AnnotationService::put_annotation(const std::string& id,
                                                  const std::string& body) {
  SequenceState* state = impl_->find(id);
  if (!state) return error_response(404, "unknown sequence: " + id);
  if (impl_->options.readonly) return error_response(403, "service is read-only");

  SequenceAnnotation annotation;
  std::uint64_t expected = 0;
  ValidationMode mode = ValidationMode::Strict;
  try {
    const json request = json::parse(body);
    if (!request.contains("expected_version")) {
      return error_response(422, "missing 'expected_version'");
    }
    expected = request.at("expected_version").get<std::uint64_t>();
    if (request.contains("mode")) {
      mode = parse_validation_mode(request.at("mode").get<std::string>());
    }
    json a = request.contains("annotation") ? request.at("annotation") : request;
    if (!a.contains("sequence_id")) a["sequence_id"] = id;
    if (!a.contains("total_frames")) a["total_frames"] = state->frame_count;
    a["version"] = expected;
    annotation = SequenceAnnotation::from_json(a);
  } catch (const json::exception& e) {
    return error_response(422, std::string("malformed annotation body: ") + e.what());
  } catch (const Error& e) {
    return error_response(422, e.what());
  }
  if (annotation.sequence_id != id) {
    return error_response(422, "body sequence_id '" + annotation.sequence_id +
                                   "' does not match '" + id + "'");
  }
  if (annotation.total_frames != state->frame_count) {
    return error_response(422, "total_frames must be " +
                                   std::to_string(state->frame_count));
  }
  const auto violations = validate(annotation, mode);
  if (!violations.empty()) {
    return {422, json{{"error", "annotation failed validation"},
                      {"mode", to_string(mode)},
                      {"violations", violations_json(violations)}}};
  }

  std::unique_lock guard(state->lock);
  if (expected != state->annotation.version) {
    return {409, json{{"error", "version conflict"},
                      {"expected_version", expected},
                      {"current_version", state->annotation.version}}};
  }
  annotation.version = state->annotation.version + 1;
  impl_->persist(*state, annotation, mode);
  state->annotation = std::move(annotation);
  state->mode = mode;
  state->annotated = true;
  return {200, json{{"sequence_id", id}, {"version", state->annotation.version}}};
}

ServiceResponse AnnotationService::validate_annotation(const std::string& body) const {
  try {
    const json request = json::parse(body);
    ValidationMode mode = ValidationMode::Strict;
    if (request.contains("mode")) {
      mode = parse_validation_mode(request.at("mode").get<std::string>());
    }
    const json& a = request.contains("annotation") ? request.at("annotation") : request;
    const auto annotation = SequenceAnnotation::from_json(a);
    const auto violations = validate(annotation, mode);
    return {200, json{{"mode", to_string(mode)},
                      {"valid", violations.empty()},
                      {"violations", violations_json(violations)}}};
  } catch (const json::exception& e) {
    return error_response(422, std::string("malformed annotation body: ") + e.what());
  } catch (const Error& e) {
    return error_response(422, e.what());
  }
}

ServiceResponse AnnotationService::taxonomy(const std::string& level) const {
  Level parsed;
  try {
    parsed = parse_level(level);
  } catch (const Error& e) {
    return error_response(422, e.what());
  }
  const auto& tax = default_taxonomy(parsed);
  json labels = json::array();
  for (std::size_t id = 0; id < tax.size(); ++id) {
    const Label& label = tax.label(static_cast<LabelId>(id));
    json entry{{"id", id},
               {"name", label.name()},
               {"category", to_string(label.category)}};
    if (label.jump_type) entry["jump_type"] = to_string(*label.jump_type);
    if (label.rotations) entry["rotations"] = *label.rotations;
    labels.push_back(std::move(entry));
  }
  return {200, json{{"level", to_string(parsed)}, {"labels", labels}}};
}

ServiceResponse AnnotationService::stats() const {
  std::vector<SequenceAnnotation> annotations;
  std::map<std::string, std::size_t> frames;
  for (const auto& [id, state] : impl_->sequences) {
    std::shared_lock guard(state->lock);
    if (!state->annotated) continue;
    annotations.push_back(state->annotation);
    frames[id] = state->frame_count;
  }
  return {200, corpus_stats(annotations, frames).to_json()};
}

int AnnotationService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void AnnotationService::listen() { impl_->server.listen_after_bind(); }

void AnnotationService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void AnnotationService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace fsjump

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fsjump/labels.hpp"

namespace fsjump {

struct ServiceOptions {
  std::filesystem::path manifest;
  // Where annotations without an explicit manifest path are stored;
  // defaults to <manifest dir>/annotations.
  std::optional<std::filesystem::path> annotation_dir;
  std::optional<std::filesystem::path> ui_dir;
  bool readonly = false;
  std::size_t pose_cache_size = 8;
  Level default_level = Level::Set;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// HTTP/JSON annotation service over a corpus manifest.
//
//   GET  /api/sequences
//   GET  /api/sequences/{id}/poses?from=&to=&aligned=
//   GET  /api/sequences/{id}/annotation
//   PUT  /api/sequences/{id}/annotation   {"expected_version", "mode", "annotation"}
//   POST /api/validate                    {"annotation", "mode"}
//   GET  /api/taxonomy?level=
//   GET  /api/stats
//
// Writes use optimistic concurrency: a PUT whose expected_version differs
// from the stored version gets 409. Writes to one sequence are serialized;
// reads take a shared lock. Files are replaced by write-then-rename.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceOptions options);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  ServiceResponse list_sequences() const;
  ServiceResponse get_poses(const std::string& id,
                            const std::optional<std::string>& from,
                            const std::optional<std::string>& to,
                            bool aligned) const;
  ServiceResponse get_annotation(const std::string& id) const;
  ServiceResponse put_annotation(const std::string& id,
                                 const std::string& body);
  ServiceResponse validate_annotation(const std::string& body) const;
  ServiceResponse taxonomy(const std::string& level) const;
  ServiceResponse stats() const;

  // Binds to host:port (port 0 picks a free port) and returns the port.
  int bind(const std::string& host, int port);
  // Serves until stop(); requires bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fsjump

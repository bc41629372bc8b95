#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "fcxl/backend.hpp"
#include "fcxl/crop.hpp"

namespace fcxl {

inline constexpr const char* kProtocolHeader = "X-Fcxl-Protocol";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string backend = "classical";
  std::chrono::seconds session_ttl{30 * 60};
  std::size_t max_image_pixels = 32'000'000;
  std::size_t max_body_bytes = 256u << 20;
  std::string cors_origin = "*";
  std::optional<std::filesystem::path> ui_dir;
  CropConfig crop;
  unsigned worker_threads = 8;
};

/// HTTP session service around the round loop. Sessions live in memory;
/// rounds within a session are serialized (a concurrent round gets 409) while
/// distinct sessions proceed in parallel.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Makes a backend selectable through the `backend` query parameter.
  /// The configured default is created on first use via make_backend.
  void register_backend(const std::string& name, std::shared_ptr<SegmenterBackend> backend);

  /// Binds the listening socket; throws "port-busy" when it is taken.
  /// Returns the bound port.
  int bind();
  /// Serves until stop(); binds first if needed.
  void run();
  /// run() on a background thread, returning once the server accepts.
  void start();
  /// Stops accepting, lets in-flight requests finish, joins the server thread.
  void stop();

  int port() const;
  std::size_t session_count() const;
  /// Drops sessions idle for longer than the TTL; returns how many.
  std::size_t evict_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fcxl

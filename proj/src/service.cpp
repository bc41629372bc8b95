#include "fcxl/service.hpp"

#include <algorithm>
#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <ctime>
#include <future>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fcxl/image_io.hpp"
#include "fcxl/mask_ops.hpp"
#include "fcxl/pipeline.hpp"
#include "fcxl/random.hpp"
#include "fcxl/remote.hpp"
#include "fcxl/rle.hpp"

namespace fcxl {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

struct Session {
  std::string id;
  std::string created_at;
  std::string backend_name;
  std::shared_ptr<SegmenterBackend> backend;
  std::mutex round_mutex;  // held for the whole round; try_lock failure means 409
  SessionState state;
  std::shared_future<std::string> context;
  std::atomic<Clock::rep> last_used{0};

  void touch() { last_used = Clock::now().time_since_epoch().count(); }
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json box_json(const PixelBox& b) { return {b.x0, b.y0, b.x1, b.y1}; }

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

int status_for(const Error& e) {
  if (e.code() == "image-too-large") return 413;
  if (e.category() == ErrorCategory::backend) return 502;
  if (e.category() == ErrorCategory::io) return 400;
  return 422;
}

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  httplib::Server server;
  std::thread server_thread;
  std::thread sweeper;
  std::mutex sweeper_mutex;
  std::condition_variable sweeper_cv;
  bool stopping = false;
  int bound_port = -1;

  mutable std::mutex store_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::map<std::string, std::shared_ptr<SegmenterBackend>> backends;
  std::uint64_t id_counter = 0;
  std::uint64_t id_salt = std::random_device{}();

  explicit Impl(ServiceConfig c) : cfg(std::move(c)) { install_routes(); }

  std::shared_ptr<SegmenterBackend> backend_for(const std::string& name) {
    std::lock_guard lock(store_mutex);
    if (auto it = backends.find(name); it != backends.end()) return it->second;
    if (name != cfg.backend) throw Error("unknown-backend", "backend '" + name + "' is not enabled");
    std::shared_ptr<SegmenterBackend> b = make_backend(name);
    backends[name] = b;
    return b;
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(store_mutex);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  std::string next_id() {
    std::lock_guard lock(store_mutex);
    const std::uint64_t n = ++id_counter;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "s%llu-%08llx", static_cast<unsigned long long>(n),
                  static_cast<unsigned long long>(mix64(n ^ id_salt) & 0xffffffffULL));
    return buf;
  }

  json summary(const Session& s) const {
    json history = json::array();
    for (const auto& r : s.state.history) history.push_back(to_json(r.interaction));
    return {{"id", s.id},
            {"created_at", s.created_at},
            {"backend", s.backend_name},
            {"width", s.state.image.width()},
            {"height", s.state.image.height()},
            {"round", s.state.round},
            {"started_from_mask", s.state.started_from_mask},
            {"history", history}};
  }

  RgbImage read_image(const std::string& bytes) {
    const std::span<const std::uint8_t> span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
    return decode_image(span, cfg.max_image_pixels);
  }

  BinaryMask read_mask(const std::string& bytes) {
    return decode_mask_png({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    std::string image_bytes;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) return send_error(res, 400, "missing-image", "multipart field 'image' is required");
      image_bytes = req.get_file_value("image").content;
    } else {
      image_bytes = req.body;
    }
    if (image_bytes.empty()) return send_error(res, 400, "missing-image", "request carries no image");

    auto s = std::make_shared<Session>();
    try {
      s->backend_name = req.has_param("backend") ? req.get_param_value("backend") : cfg.backend;
      s->backend = backend_for(s->backend_name);
      RgbImage image = read_image(image_bytes);
      std::optional<BinaryMask> initial;
      if (req.has_file("initial_mask")) {
        initial = read_mask(req.get_file_value("initial_mask").content);
        if (initial->size() != image.size()) {
          return send_error(res, 400, "dim-mismatch",
                            "initial_mask is " + std::to_string(initial->width()) + "x" +
                                std::to_string(initial->height()) + " but the image is " +
                                std::to_string(image.width()) + "x" + std::to_string(image.height()));
        }
      }
      std::optional<BinaryMask> gt;
      if (req.has_file("gt")) {
        gt = read_mask(req.get_file_value("gt").content);
        if (gt->size() != image.size()) return send_error(res, 400, "dim-mismatch", "gt size differs from the image");
      }
      s->state = SessionState::start(std::move(image), std::move(initial), cfg.crop);
      s->state.ground_truth = std::move(gt);
    } catch (const Error& e) {
      const int status = e.code() == "image-too-large" ? 413 : 400;
      return send_error(res, status, e.code(), e.what());
    }
    s->id = next_id();
    s->state.session_id = s->id;
    s->created_at = utc_now();
    s->touch();
    if (s->backend->has_context()) {
      auto backend = s->backend;
      const RgbImage resized = resize(s->state.image, {cfg.crop.context_size, cfg.crop.context_size});
      const std::string id = s->id;
      s->context = std::async(std::launch::async, [backend, resized, id] {
                     return backend->context_precompute(resized, id);
                   }).share();
    }
    {
      std::lock_guard lock(store_mutex);
      sessions[s->id] = s;
    }
    spdlog::info("session {} created ({}x{}, backend {})", s->id, s->state.image.width(),
                 s->state.image.height(), s->backend_name);
    send_json(res, 201, summary(*s));
  }

  void interact(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = find(id);
    if (!s) return send_error(res, 404, "unknown-session", "no session '" + id + "'");
    std::unique_lock lock(s->round_mutex, std::try_to_lock);
    if (!lock.owns_lock()) return send_error(res, 409, "round-in-flight", "a round is already running");
    s->touch();
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return send_error(res, 400, "bad-json", e.what());
    }
    try {
      const Interaction interaction = interaction_from_json(body);
      validate_interaction(interaction, s->state.image.size());
      if (s->context.valid() && !s->state.context_token) s->state.context_token = s->context.get();
      const RoundResult r = run_round(s->state, *s->backend, interaction);
      json out{{"mask_rle", rle_to_json(rle_encode(r.mask))},
               {"focus_box", box_json(r.focus_box)},
               {"target_box", box_json(r.target_box)},
               {"round", s->state.round},
               {"timings",
                {{"coarse_ms", r.timings.coarse_ms},
                 {"refine_ms", r.timings.refine_ms},
                 {"total_ms", r.timings.total_ms},
                 {"refine_patches", r.timings.refine_patches}}}};
      if (s->state.ground_truth) out["iou_vs_gt"] = iou(r.mask, *s->state.ground_truth);
      s->touch();
      send_json(res, 200, out);
    } catch (const Error& e) {
      send_error(res, status_for(e), e.code(), e.what());
    }
  }

  void undo_round(const std::string& id, httplib::Response& res) {
    auto s = find(id);
    if (!s) return send_error(res, 404, "unknown-session", "no session '" + id + "'");
    std::unique_lock lock(s->round_mutex, std::try_to_lock);
    if (!lock.owns_lock()) return send_error(res, 409, "round-in-flight", "a round is already running");
    s->touch();
    try {
      undo(s->state);
    } catch (const Error& e) {
      return send_error(res, 409, e.code(), e.what());
    }
    send_json(res, 200, {{"round", s->state.round}, {"mask_rle", rle_to_json(rle_encode(s->state.prev_mask))}});
  }

  template <typename F>
  void with_session(const std::string& id, httplib::Response& res, F&& f) {
    auto s = find(id);
    if (!s) return send_error(res, 404, "unknown-session", "no session '" + id + "'");
    std::unique_lock lock(s->round_mutex, std::try_to_lock);
    if (!lock.owns_lock()) return send_error(res, 409, "round-in-flight", "a round is already running");
    s->touch();
    f(*s);
  }

  void install_routes() {
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    const unsigned threads = std::max(2u, cfg.worker_threads);
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server.set_payload_max_length(cfg.max_body_bytes);
    server.set_default_headers({{kProtocolHeader, kWireVersion},
                                {"Access-Control-Allow-Origin", cfg.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"protocol", kWireVersion}});
    });
    server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      create_session(req, res);
    });
    server.Post(R"(/v1/sessions/([^/]+)/interactions)", [this](const httplib::Request& req, httplib::Response& res) {
      interact(req.matches[1], req, res);
    });
    server.Post(R"(/v1/sessions/([^/]+)/undo)", [this](const httplib::Request& req, httplib::Response& res) {
      undo_round(req.matches[1], res);
    });
    server.Get(R"(/v1/sessions/([^/]+)/mask\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req.matches[1], res, [&](Session& s) {
        const Bytes png = encode_mask_png(s.state.prev_mask);
        res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
      });
    });
    server.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req.matches[1], res, [&](Session& s) { send_json(res, 200, summary(s)); });
    });
    server.Delete(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(store_mutex);
      if (sessions.erase(req.matches[1]) == 0) {
        return send_error(res, 404, "unknown-session", "no session '" + req.matches[1].str() + "'");
      }
      res.status = 204;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      } catch (...) {
        send_error(res, 500, "internal", "unknown failure");
      }
    });
    if (cfg.ui_dir) {
      if (!server.set_mount_point("/", cfg.ui_dir->string())) {
        throw Error("bad-ui-dir", "cannot serve UI assets from " + cfg.ui_dir->string());
      }
    }
  }

  std::size_t evict_idle() {
    const auto cutoff = (Clock::now() - cfg.session_ttl).time_since_epoch().count();
    std::lock_guard lock(store_mutex);
    std::size_t evicted = 0;
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::unique_lock busy(it->second->round_mutex, std::try_to_lock);
      if (busy.owns_lock() && it->second->last_used.load() < cutoff) {
        busy.unlock();
        it = sessions.erase(it);
        ++evicted;
      } else {
        ++it;
      }
    }
    return evicted;
  }

  void sweep_loop() {
    const auto period = std::clamp<std::chrono::seconds>(cfg.session_ttl, std::chrono::seconds(1),
                                                          std::chrono::seconds(30));
    std::unique_lock lock(sweeper_mutex);
    while (!sweeper_cv.wait_for(lock, period, [this] { return stopping; })) {
      lock.unlock();
      if (const auto n = evict_idle(); n > 0) spdlog::info("evicted {} idle session(s)", n);
      lock.lock();
    }
  }
};

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() { stop(); }

void Service::register_backend(const std::string& name, std::shared_ptr<SegmenterBackend> backend) {
  std::lock_guard lock(impl_->store_mutex);
  impl_->backends[name] = std::move(backend);
}

int Service::bind() {
  if (impl_->bound_port >= 0) return impl_->bound_port;
  auto& cfg = impl_->cfg;
  if (cfg.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(cfg.host);
  } else if (impl_->server.bind_to_port(cfg.host, cfg.port)) {
    impl_->bound_port = cfg.port;
  }
  if (impl_->bound_port < 0) {
    throw Error("port-busy", "cannot bind " + cfg.host + ":" + std::to_string(cfg.port), ErrorCategory::io);
  }
  return impl_->bound_port;
}

void Service::run() {
  bind();
  {
    std::lock_guard lock(impl_->sweeper_mutex);
    impl_->stopping = false;
  }
  if (!impl_->sweeper.joinable()) impl_->sweeper = std::thread([this] { impl_->sweep_loop(); });
  spdlog::info("serving on {}:{}", impl_->cfg.host, impl_->bound_port);
  impl_->server.listen_after_bind();
}

void Service::start() {
  bind();
  impl_->server_thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
}

void Service::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->sweeper_mutex);
    impl_->stopping = true;
  }
  impl_->sweeper_cv.notify_all();
  if (impl_->server.is_running() || impl_->server_thread.joinable()) impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  if (impl_->sweeper.joinable()) impl_->sweeper.join();
}

int Service::port() const { return impl_->bound_port; }

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->store_mutex);
  return impl_->sessions.size();
}

std::size_t Service::evict_idle() { return impl_->evict_idle(); }

}  // namespace fcxl

#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "fcxl/backend.hpp"

namespace fcxl {

inline constexpr const char* kWireVersion = "fcxl/1";

/// Float maps travel as base64 of row-major little-endian float32.
std::string encode_f32le(const ScoreMap& m);
ScoreMap decode_f32le(const std::string& b64, Size size);

/// Bi-maps travel as RGB PNGs: positive in R, negative in G, B zero.
std::string encode_bimap_png(const BiMap& b);
BiMap decode_bimap_png(const std::string& b64);

nlohmann::json coarse_request_json(const CoarseRequest& req);
nlohmann::json refine_request_json(const RefineRequest& req);
nlohmann::json context_request_json(const RgbImage& image, const std::string& session);

/// Response validation. Errors: "remote-malformed" for anything unparsable
/// or missing, "remote-dim-mismatch" for maps of the wrong size,
/// "remote-server-error" when the server reports one.
ScoreMap parse_coarse_response(const std::string& body, Size expected);
RefineOutput parse_refine_response(const std::string& body, Size expected);
std::string parse_context_response(const std::string& body);

struct RemoteEndpoint {
  std::string base;  // scheme://host:port
  std::string path;  // request path, "/" when absent

  static RemoteEndpoint parse(const std::string& url);
};

/// Client for a model server speaking the JSON wire protocol. Each call opens
/// its own connection, so concurrent sessions never share client state.
class RemoteBackend : public SegmenterBackend {
 public:
  explicit RemoteBackend(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(30),
                         bool refine = true, bool context = true);

  std::string name() const override { return "remote:" + url_; }
  ScoreMap coarse_segment(const CoarseRequest& req) override;
  bool has_refine() const override { return refine_; }
  RefineOutput refine(const RefineRequest& req) override;
  bool has_context() const override { return context_; }
  std::string context_precompute(const RgbImage& image, const std::string& session) override;

  /// Connects once; throws "remote-transport" when the endpoint is down.
  void probe() const;

 private:
  std::string post(const nlohmann::json& body) const;

  std::string url_;
  RemoteEndpoint endpoint_;
  std::chrono::milliseconds timeout_;
  bool refine_;
  bool context_;
};

/// Builds a backend from its command-line name: "oracle:perfect",
/// "oracle:delay:K", "oracle:never", "oracle:identity", "oracle:echo",
/// "classical" or "remote:<url>".
std::unique_ptr<SegmenterBackend> make_backend(const std::string& spec);

}  // namespace fcxl

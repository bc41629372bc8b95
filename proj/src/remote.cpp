#include "fcxl/remote.hpp"

#include <bit>
#include <cstring>

#include <httplib.h>

#include "fcxl/base64.hpp"
#include "fcxl/geodesic.hpp"
#include "fcxl/image_io.hpp"
#include "fcxl/oracles.hpp"

namespace fcxl {

static_assert(std::endian::native == std::endian::little, "wire floats assume a little-endian host");

namespace {

[[noreturn]] void malformed(const std::string& what) { throw BackendError("remote-malformed", what); }

nlohmann::json parse_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("response is not a JSON object");
  if (j.contains("error") && !j["error"].is_null()) {
    const auto& err = j["error"];
    throw BackendError("remote-server-error", err.value("code", std::string("unknown")) + ": " +
                                                  err.value("message", std::string()));
  }
  if (j.value("v", std::string()) != kWireVersion) malformed("unsupported or missing protocol version");
  return j;
}

ScoreMap read_map(const nlohmann::json& j, const char* key, Size expected) {
  if (!j.contains(key) || !j[key].is_string()) malformed(std::string("missing field ") + key);
  if (!j.contains("w") || !j.contains("h") || !j["w"].is_number_integer() || !j["h"].is_number_integer()) {
    malformed("missing map dimensions");
  }
  const Size got{j["w"].get<int>(), j["h"].get<int>()};
  if (got != expected) {
    throw BackendError("remote-dim-mismatch", "expected " + std::to_string(expected.width) + "x" +
                                                  std::to_string(expected.height) + ", got " +
                                                  std::to_string(got.width) + "x" + std::to_string(got.height));
  }
  try {
    return decode_f32le(j[key].get<std::string>(), expected);
  } catch (const BackendError&) {
    throw;
  } catch (const Error& e) {
    malformed(e.what());
  }
}

std::string png_b64(const RgbImage& img) { return base64_encode(encode_png(img)); }
std::string png_b64(const BinaryMask& m) { return base64_encode(encode_mask_png(m)); }

nlohmann::json request_header(const char* op, const CallContext& ctx, Size out) {
  nlohmann::json j{{"v", kWireVersion}, {"op", op}, {"session", ctx.session},
                   {"out_w", out.width}, {"out_h", out.height}};
  if (ctx.context_token) j["context_token"] = *ctx.context_token;
  return j;
}

}  // namespace

std::string encode_f32le(const ScoreMap& m) {
  const auto data = m.data();
  std::vector<std::uint8_t> bytes(data.size() * sizeof(float));
  std::memcpy(bytes.data(), data.data(), bytes.size());
  return base64_encode(bytes);
}

ScoreMap decode_f32le(const std::string& b64, Size size) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() != size.area() * sizeof(float)) {
    throw BackendError("remote-malformed", "float payload length does not match its dimensions");
  }
  std::vector<float> values(size.area());
  std::memcpy(values.data(), bytes.data(), bytes.size());
  try {
    return ScoreMap(size, std::move(values));
  } catch (const Error& e) {
    throw BackendError("remote-malformed", e.what());
  }
}

std::string encode_bimap_png(const BiMap& b) {
  RgbImage img(b.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(b.positive(x, y) * 255),
                     static_cast<std::uint8_t>(b.negative(x, y) * 255), 0});
    }
  }
  return png_b64(img);
}

BiMap decode_bimap_png(const std::string& b64) {
  const RgbImage img = decode_image(base64_decode(b64));
  BiMap out = BiMap::empty(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.positive(x, y) = img.pixel(x, y)[0] >= 128;
      out.negative(x, y) = img.pixel(x, y)[1] >= 128;
    }
  }
  return out;
}

nlohmann::json coarse_request_json(const CoarseRequest& req) {
  nlohmann::json j = request_header("coarse", req.ctx, req.image.size());
  j["image_png"] = png_b64(req.image);
  j["bimap_png"] = encode_bimap_png(req.bimap);
  j["prev_mask_png"] = png_b64(req.prev_mask);
  return j;
}

nlohmann::json refine_request_json(const RefineRequest& req) {
  nlohmann::json j = request_header("refine", req.ctx, req.image.size());
  j["image_png"] = png_b64(req.image);
  j["bimap_png"] = encode_bimap_png(req.bimap);
  j["coarse_logits_f32le"] = encode_f32le(req.coarse_logits);
  return j;
}

nlohmann::json context_request_json(const RgbImage& image, const std::string& session) {
  return {{"v", kWireVersion}, {"op", "context"}, {"session", session}, {"image_png", png_b64(image)},
          {"out_w", image.width()}, {"out_h", image.height()}};
}

ScoreMap parse_coarse_response(const std::string& body, Size expected) {
  return read_map(parse_body(body), "logits_f32le", expected);
}

RefineOutput parse_refine_response(const std::string& body, Size expected) {
  const auto j = parse_body(body);
  return {read_map(j, "aux_detail_f32le", expected), read_map(j, "aux_boundary_f32le", expected)};
}

std::string parse_context_response(const std::string& body) {
  const auto j = parse_body(body);
  if (!j.contains("context_token") || !j["context_token"].is_string()) malformed("missing context_token");
  return j["context_token"].get<std::string>();
}

RemoteEndpoint RemoteEndpoint::parse(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) {
    throw Error("bad-remote-url", "remote URL must look like http://host:port/path, got '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  RemoteEndpoint e;
  e.base = url.substr(0, slash);
  e.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (e.base.size() <= scheme + 3) throw Error("bad-remote-url", "remote URL has no host");
  return e;
}

RemoteBackend::RemoteBackend(const std::string& url, std::chrono::milliseconds timeout, bool refine,
                             bool context)
    : url_(url), endpoint_(RemoteEndpoint::parse(url)), timeout_(timeout), refine_(refine), context_(context) {}

std::string RemoteBackend::post(const nlohmann::json& body) const {
  httplib::Client client(endpoint_.base);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  auto res = client.Post(endpoint_.path, body.dump(), "application/json");
  if (!res) {
    throw BackendError("remote-transport", url_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    // Servers may still describe the failure in a protocol error body.
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_object() && j.contains("error") && !j["error"].is_null()) parse_body(res->body);
    throw BackendError("remote-transport", url_ + ": HTTP status " + std::to_string(res->status));
  }
  return res->body;
}

void RemoteBackend::probe() const {
  httplib::Client client(endpoint_.base);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Get(endpoint_.path);
  if (!res) throw BackendError("remote-transport", url_ + ": " + httplib::to_string(res.error()));
}

ScoreMap RemoteBackend::coarse_segment(const CoarseRequest& req) {
  return parse_coarse_response(post(coarse_request_json(req)), req.image.size());
}

RefineOutput RemoteBackend::refine(const RefineRequest& req) {
  return parse_refine_response(post(refine_request_json(req)), req.image.size());
}

std::string RemoteBackend::context_precompute(const RgbImage& image, const std::string& session) {
  return parse_context_response(post(context_request_json(image, session)));
}

std::unique_ptr<SegmenterBackend> make_backend(const std::string& spec) {
  if (spec == "classical") return std::make_unique<GeodesicBackend>();
  if (spec == "oracle:perfect") return std::make_unique<PerfectOracle>();
  if (spec == "oracle:never") return std::make_unique<NeverOracle>();
  if (spec == "oracle:identity") return std::make_unique<IdentityOracle>();
  if (spec == "oracle:echo") return std::make_unique<EchoOracle>();
  if (spec.rfind("oracle:delay:", 0) == 0) {
    try {
      return std::make_unique<DelayOracle>(std::stoi(spec.substr(13)));
    } catch (const std::logic_error&) {
      throw Error("bad-backend", "delay oracle needs an integer round count: '" + spec + "'");
    }
  }
  if (spec.rfind("remote:", 0) == 0) return std::make_unique<RemoteBackend>(spec.substr(7));
  throw Error("bad-backend", "unknown backend '" + spec + "'");
}

}  // namespace fcxl

#include "fcxl/rle.hpp"

namespace fcxl {

Rle rle_encode(const BinaryMask& m) {
  Rle out{m.height(), m.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < m.width(); ++x) {
    for (int y = 0; y < m.height(); ++y) {
      if (m(x, y) != current) {
        out.counts.push_back(run);
        run = 0;
        current = m(x, y);
      }
      ++run;
    }
  }
  out.counts.push_back(run);
  return out;
}

BinaryMask rle_decode(const Rle& rle) {
  BinaryMask out({rle.width, rle.height});
  std::size_t pos = 0;
  const std::size_t total = out.size().area();
  std::uint8_t value = 0;
  for (auto run : rle.counts) {
    if (pos + run > total) throw Error("bad-rle", "run lengths exceed mask area");
    for (std::uint32_t i = 0; i < run; ++i, ++pos) {
      const int x = static_cast<int>(pos / rle.height);
      const int y = static_cast<int>(pos % rle.height);
      out(x, y) = value;
    }
    value ^= 1;
  }
  if (pos != total) throw Error("bad-rle", "run lengths do not cover the mask");
  return out;
}

std::string rle_to_string(const Rle& rle) {
  std::string s;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    long long x = rle.counts[i];
    if (i > 2) x -= static_cast<long long>(rle.counts[i - 2]);
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

Rle rle_from_string(std::string_view counts, int height, int width) {
  Rle out{height, width, {}};
  std::size_t p = 0;
  while (p < counts.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= counts.size()) throw Error("bad-rle", "truncated counts string");
      const long long c = static_cast<long long>(counts[p]) - 48;
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (out.counts.size() > 2) x += static_cast<long long>(out.counts[out.counts.size() - 2]);
    if (x < 0) throw Error("bad-rle", "negative run length");
    out.counts.push_back(static_cast<std::uint32_t>(x));
  }
  return out;
}

nlohmann::json rle_to_json(const Rle& rle) {
  return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

Rle rle_from_json(const nlohmann::json& j) {
  try {
    const auto& size = j.at("size");
    const int h = size.at(0).get<int>();
    const int w = size.at(1).get<int>();
    const auto& counts = j.at("counts");
    if (counts.is_string()) return rle_from_string(counts.get<std::string>(), h, w);
    return Rle{h, w, counts.get<std::vector<std::uint32_t>>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-rle", e.what());
  }
}

}  // namespace fcxl

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcxl/mask.hpp"

namespace fcxl {

/// COCO-style run-length encoding: alternating run lengths of 0s and 1s over
/// the column-major pixel order, starting with a (possibly empty) 0-run.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

Rle rle_encode(const BinaryMask& m);
BinaryMask rle_decode(const Rle& rle);

/// The compact LEB128-like string form used by pycocotools for "counts".
std::string rle_to_string(const Rle& rle);
Rle rle_from_string(std::string_view counts, int height, int width);

/// {"size": [h, w], "counts": [...]}; decoding also accepts string counts.
nlohmann::json rle_to_json(const Rle& rle);
Rle rle_from_json(const nlohmann::json& j);

}  // namespace fcxl

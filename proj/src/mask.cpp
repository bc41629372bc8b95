#include "fcxl/mask.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fcxl {

namespace {

void require_positive(Size size) {
  if (size.width <= 0 || size.height <= 0) {
    throw Error("bad-dims", "raster dimensions must be positive, got " +
                                std::to_string(size.width) + "x" +
                                std::to_string(size.height));
  }
}

}  // namespace

void require_same_size(Size a, Size b, const char* what) {
  if (a != b) {
    throw Error("dim-mismatch", std::string(what) + ": " + std::to_string(a.width) + "x" +
                                    std::to_string(a.height) + " vs " +
                                    std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

BinaryMask::BinaryMask(Size size, std::uint8_t fill) : size_(size) {
  require_positive(size);
  data_.assign(size.area(), fill ? 1 : 0);
}

BinaryMask::BinaryMask(Size size, std::vector<std::uint8_t> data)
    : size_(size), data_(std::move(data)) {
  require_positive(size);
  if (data_.size() != size.area()) {
    throw Error("bad-dims", "mask data length does not match dimensions");
  }
  for (auto v : data_) {
    if (v > 1) throw Error("bad-mask-value", "binary mask elements must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

bool BinaryMask::any() const {
  return std::find(data_.begin(), data_.end(), 1) != data_.end();
}

BinaryMask BinaryMask::operator~() const {
  BinaryMask out = *this;
  for (auto& v : out.data_) v ^= 1;
  return out;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  require_same_size(size_, other.size_, "mask union");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] |= other.data_[i];
  return *this;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& other) {
  require_same_size(size_, other.size_, "mask intersection");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] &= other.data_[i];
  return *this;
}

ScoreMap::ScoreMap(Size size, float fill) : size_(size) {
  require_positive(size);
  data_.assign(size.area(), fill);
  check_finite();
}

ScoreMap::ScoreMap(Size size, std::vector<float> data) : size_(size), data_(std::move(data)) {
  require_positive(size);
  if (data_.size() != size.area()) {
    throw Error("bad-dims", "score map data length does not match dimensions");
  }
  check_finite();
}

void ScoreMap::check_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error("non-finite-score", "score map contains NaN or Inf");
  }
}

void ScoreMap::check_probability() const {
  check_finite();
  for (float v : data_) {
    if (v < 0.0f || v > 1.0f) throw Error("bad-probability", "probability outside [0,1]");
  }
}

BinaryMask RegionLabeling::region(int label) const {
  BinaryMask out(size);
  auto dst = out.data();
  for (std::size_t i = 0; i < labels.size(); ++i) dst[i] = labels[i] == label ? 1 : 0;
  return out;
}

std::vector<std::size_t> RegionLabeling::areas() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(region_count) + 1, 0);
  for (auto l : labels) ++out[static_cast<std::size_t>(l)];
  return out;
}

}  // namespace fcxl

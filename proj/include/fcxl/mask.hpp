#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fcxl/error.hpp"

namespace fcxl {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct Size {
  int width = 0;
  int height = 0;
  friend bool operator==(const Size&, const Size&) = default;
  std::size_t area() const { return static_cast<std::size_t>(width) * height; }
  bool contains(Pixel p) const {
    return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height;
  }
};

// Row-major binary raster; every element is 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Size size, std::uint8_t fill = 0);
  BinaryMask(Size size, std::vector<std::uint8_t> data);

  static BinaryMask full(Size size) { return BinaryMask(size, 1); }

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }
  bool empty_dims() const { return size_.area() == 0; }

  std::uint8_t operator()(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& operator()(int x, int y) { return data_[index(x, y)]; }
  std::uint8_t at(Pixel p) const { return data_[index(p.x, p.y)]; }
  void set(Pixel p, bool v) { data_[index(p.x, p.y)] = v ? 1 : 0; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::size_t count() const;
  bool any() const;

  BinaryMask operator~() const;
  BinaryMask& operator|=(const BinaryMask& other);
  BinaryMask& operator&=(const BinaryMask& other);
  friend BinaryMask operator|(BinaryMask a, const BinaryMask& b) { return a |= b; }
  friend BinaryMask operator&(BinaryMask a, const BinaryMask& b) { return a &= b; }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * size_.width + x;
  }

  Size size_;
  std::vector<std::uint8_t> data_;
};

// Row-major real-valued raster holding logits or probabilities.
class ScoreMap {
 public:
  ScoreMap() = default;
  explicit ScoreMap(Size size, float fill = 0.0f);
  ScoreMap(Size size, std::vector<float> data);

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }

  float operator()(int x, int y) const { return data_[index(x, y)]; }
  float& operator()(int x, int y) { return data_[index(x, y)]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  // Throws "non-finite-score" when any element is NaN/Inf.
  void check_finite() const;
  // Additionally requires every value in [0,1].
  void check_probability() const;

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * size_.width + x;
  }

  Size size_;
  std::vector<float> data_;
};

// Labels 1..region_count over regions; 0 marks background for component
// labelings.
struct RegionLabeling {
  Size size;
  std::vector<std::int32_t> labels;
  int region_count = 0;

  std::int32_t operator()(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * size.width + x];
  }
  BinaryMask region(int label) const;
  std::vector<std::size_t> areas() const;  // index 0 is background
};

void require_same_size(Size a, Size b, const char* what);

}  // namespace fcxl

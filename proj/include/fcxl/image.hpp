#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fcxl/mask.hpp"

namespace fcxl {

struct PixelBox;

// Interleaved 8-bit RGB raster.
class RgbImage {
 public:
  RgbImage() = default;
  explicit RgbImage(Size size, std::array<std::uint8_t, 3> fill = {0, 0, 0});
  RgbImage(Size size, std::vector<std::uint8_t> data);

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }

  const std::uint8_t* pixel(int x, int y) const { return &data_[offset(x, y)]; }
  std::uint8_t* pixel(int x, int y) { return &data_[offset(x, y)]; }
  void set(int x, int y, std::array<std::uint8_t, 3> rgb) {
    auto* p = pixel(x, y);
    p[0] = rgb[0];
    p[1] = rgb[1];
    p[2] = rgb[2];
  }

  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * size_.width + x) * 3;
  }

  Size size_;
  std::vector<std::uint8_t> data_;
};

/// Bilinear resize with the align-corners=false convention.
RgbImage resize(const RgbImage& img, Size target);

RgbImage crop(const RgbImage& img, const PixelBox& box);
BinaryMask crop(const BinaryMask& m, const PixelBox& box);
ScoreMap crop(const ScoreMap& m, const PixelBox& box);

}  // namespace fcxl

#include "fcxl/image.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "fcxl/crop.hpp"

namespace fcxl {

RgbImage::RgbImage(Size size, std::array<std::uint8_t, 3> fill) : size_(size) {
  if (size.width <= 0 || size.height <= 0) throw Error("bad-dims", "image dimensions must be positive");
  data_.resize(size.area() * 3);
  for (std::size_t i = 0; i < size.area(); ++i) {
    data_[3 * i] = fill[0];
    data_[3 * i + 1] = fill[1];
    data_[3 * i + 2] = fill[2];
  }
}

RgbImage::RgbImage(Size size, std::vector<std::uint8_t> data) : size_(size), data_(std::move(data)) {
  if (size.width <= 0 || size.height <= 0) throw Error("bad-dims", "image dimensions must be positive");
  if (data_.size() != size.area() * 3) throw Error("bad-dims", "image data length does not match dimensions");
}

RgbImage resize(const RgbImage& img, Size target) {
  if (target == img.size()) return img;
  RgbImage out(target);
  auto source = [](int dst, int in, int out_n) {
    double s = (dst + 0.5) * static_cast<double>(in) / out_n - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    return std::tuple{i0, std::min(i0 + 1, in - 1), s - i0};
  };
  for (int y = 0; y < target.height; ++y) {
    const auto [y0, y1, wy] = source(y, img.height(), target.height);
    for (int x = 0; x < target.width; ++x) {
      const auto [x0, x1, wx] = source(x, img.width(), target.width);
      const auto* a = img.pixel(x0, y0);
      const auto* b = img.pixel(x1, y0);
      const auto* c = img.pixel(x0, y1);
      const auto* d = img.pixel(x1, y1);
      auto* o = out.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = (1.0 - wx) * a[ch] + wx * b[ch];
        const double bot = (1.0 - wx) * c[ch] + wx * d[ch];
        o[ch] = static_cast<std::uint8_t>(std::lround((1.0 - wy) * top + wy * bot));
      }
    }
  }
  return out;
}

namespace {

void check_box(const PixelBox& box, Size size) {
  if (!box.valid() || box.x0 < 0 || box.y0 < 0 || box.x1 > size.width || box.y1 > size.height) {
    throw Error("bad-crop-box", "crop box must be non-empty and inside the image");
  }
}

}  // namespace

RgbImage crop(const RgbImage& img, const PixelBox& box) {
  check_box(box, img.size());
  RgbImage out(box.size());
  for (int y = 0; y < box.height(); ++y) {
    std::copy_n(img.pixel(box.x0, box.y0 + y), 3 * box.width(), out.pixel(0, y));
  }
  return out;
}

BinaryMask crop(const BinaryMask& m, const PixelBox& box) {
  check_box(box, m.size());
  BinaryMask out(box.size());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) out(x, y) = m(box.x0 + x, box.y0 + y);
  }
  return out;
}

ScoreMap crop(const ScoreMap& m, const PixelBox& box) {
  check_box(box, m.size());
  ScoreMap out(box.size());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) out(x, y) = m(box.x0 + x, box.y0 + y);
  }
  return out;
}

}  // namespace fcxl

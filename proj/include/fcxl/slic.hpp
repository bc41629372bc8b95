#pragma once

#include <cstdint>

#include "fcxl/image.hpp"
#include "fcxl/mask.hpp"

namespace fcxl {

struct SlicParams {
  int n_segments = 100;
  double compactness = 10.0;
  int iterations = 10;
  std::uint64_t seed = 0;
  // Random displacement of the initial grid centers, as a fraction of the
  // grid step. Zero keeps the plain grid and makes the seed irrelevant.
  double jitter = 0.0;

  void validate() const;
};

/// SLIC superpixels in CIELAB. Labels 1..K partition the image and every
/// segment is 4-connected.
RegionLabeling slic(const RgbImage& image, const SlicParams& params);

/// sRGB (D65) to CIELAB, one triple per pixel.
std::vector<float> rgb_to_lab(const RgbImage& image);

}  // namespace fcxl

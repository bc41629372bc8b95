#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fcxl/image.hpp"
#include "fcxl/mask.hpp"

namespace fcxl {

using Bytes = std::vector<std::uint8_t>;

/// Decodes PNG or JPEG (sniffed from the signature). Throws
/// "undecodable-image" for anything else or corrupt data, and
/// "image-too-large" when width*height exceeds max_pixels.
RgbImage decode_image(std::span<const std::uint8_t> bytes, std::size_t max_pixels = 0);
/// Header-only probe; same errors as decode_image.
Size probe_image_size(std::span<const std::uint8_t> bytes);

Bytes encode_png(const RgbImage& img);
Bytes encode_png_gray8(Size size, std::span<const std::uint8_t> gray);
Bytes encode_png_gray16(Size size, std::span<const std::uint16_t> gray);

/// 8-bit grayscale PNG with 0/255 values.
Bytes encode_mask_png(const BinaryMask& m);
/// Any decodable image, binarized at 128 on its grayscale rendering.
BinaryMask decode_mask_png(std::span<const std::uint8_t> bytes);
/// Region labels as a 16-bit grayscale PNG.
Bytes encode_labels_png(const RegionLabeling& labels);
RegionLabeling decode_labels_png(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

RgbImage load_image(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryMask& m);
void save_image(const std::filesystem::path& path, const RgbImage& img);

}  // namespace fcxl

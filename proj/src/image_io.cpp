#include "fcxl/image_io.hpp"

#include <png.h>
#include <jpeglib.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace fcxl {

namespace {

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

[[noreturn]] void undecodable(const std::string& why) {
  throw Error("undecodable-image", why, ErrorCategory::io);
}

void check_limit(Size s, std::size_t max_pixels) {
  if (max_pixels != 0 && s.area() > max_pixels) {
    throw Error("image-too-large", std::to_string(s.width) + "x" + std::to_string(s.height) +
                                       " exceeds " + std::to_string(max_pixels) + " pixels");
  }
}

struct PngReader {
  png_image image{};
  explicit PngReader(std::span<const std::uint8_t> bytes) {
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
      undecodable(image.message);
    }
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Returns false with err->message set on failure. Only trivially destructible
// locals live in this frame across setjmp.
bool jpeg_decode_raw(const std::uint8_t* data, std::size_t size, bool header_only,
                     std::size_t max_pixels, int* width, int* height, std::uint8_t** out,
                     JpegErrorManager* err) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err->pub);
  err->pub.error_exit = jpeg_error_exit;
  err->message[0] = '\0';
  std::uint8_t* volatile buffer = nullptr;
  if (setjmp(err->jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::free(buffer);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  *width = static_cast<int>(cinfo.image_width);
  *height = static_cast<int>(cinfo.image_height);
  if (header_only || (max_pixels != 0 && static_cast<std::size_t>(*width) * *height > max_pixels)) {
    jpeg_destroy_decompress(&cinfo);
    return true;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  buffer = static_cast<std::uint8_t*>(std::malloc(stride * cinfo.output_height));
  if (buffer == nullptr) {
    jpeg_destroy_decompress(&cinfo);
    std::strcpy(err->message, "out of memory");
    return false;
  }
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  *out = buffer;
  return true;
}

Bytes write_png(png_image& image, const void* pixels, std::ptrdiff_t row_stride) {
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels, row_stride, nullptr)) {
    throw Error("png-encode", image.message, ErrorCategory::io);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, row_stride, nullptr)) {
    throw Error("png-encode", image.message, ErrorCategory::io);
  }
  out.resize(size);
  return out;
}

png_image blank_image(Size size, png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(size.width);
  image.height = static_cast<png_uint_32>(size.height);
  image.format = format;
  return image;
}

std::vector<std::uint8_t> decode_gray8(std::span<const std::uint8_t> bytes, Size* size) {
  if (is_png(bytes)) {
    PngReader reader(bytes);
    reader.image.format = PNG_FORMAT_GRAY;
    *size = {static_cast<int>(reader.image.width), static_cast<int>(reader.image.height)};
    std::vector<std::uint8_t> gray(PNG_IMAGE_SIZE(reader.image));
    if (!png_image_finish_read(&reader.image, nullptr, gray.data(), 0, nullptr)) {
      undecodable(reader.image.message);
    }
    return gray;
  }
  const RgbImage rgb = decode_image(bytes);
  *size = rgb.size();
  std::vector<std::uint8_t> gray(rgb.size().area());
  auto src = rgb.data();
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = std::max({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
  }
  return gray;
}

}  // namespace

Size probe_image_size(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) {
    PngReader reader(bytes);
    return {static_cast<int>(reader.image.width), static_cast<int>(reader.image.height)};
  }
  if (is_jpeg(bytes)) {
    JpegErrorManager err;
    int w = 0, h = 0;
    std::uint8_t* buf = nullptr;
    if (!jpeg_decode_raw(bytes.data(), bytes.size(), true, 0, &w, &h, &buf, &err)) {
      undecodable(err.message);
    }
    return {w, h};
  }
  undecodable("unrecognized image signature");
}

RgbImage decode_image(std::span<const std::uint8_t> bytes, std::size_t max_pixels) {
  if (is_png(bytes)) {
    PngReader reader(bytes);
    const Size size{static_cast<int>(reader.image.width), static_cast<int>(reader.image.height)};
    check_limit(size, max_pixels);
    reader.image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(reader.image));
    if (!png_image_finish_read(&reader.image, nullptr, data.data(), 0, nullptr)) {
      undecodable(reader.image.message);
    }
    return RgbImage(size, std::move(data));
  }
  if (is_jpeg(bytes)) {
    JpegErrorManager err;
    int w = 0, h = 0;
    std::uint8_t* buf = nullptr;
    if (!jpeg_decode_raw(bytes.data(), bytes.size(), false, max_pixels, &w, &h, &buf, &err)) {
      undecodable(err.message);
    }
    check_limit({w, h}, max_pixels);
    if (buf == nullptr || w <= 0 || h <= 0) undecodable("empty JPEG");
    std::vector<std::uint8_t> data(buf, buf + static_cast<std::size_t>(w) * h * 3);
    std::free(buf);
    return RgbImage({w, h}, std::move(data));
  }
  undecodable("unrecognized image signature");
}

Bytes encode_png(const RgbImage& img) {
  png_image image = blank_image(img.size(), PNG_FORMAT_RGB);
  return write_png(image, img.data().data(), 0);
}

Bytes encode_png_gray8(Size size, std::span<const std::uint8_t> gray) {
  if (gray.size() != size.area()) throw Error("bad-dims", "gray buffer does not match dimensions");
  png_image image = blank_image(size, PNG_FORMAT_GRAY);
  return write_png(image, gray.data(), 0);
}

Bytes encode_png_gray16(Size size, std::span<const std::uint16_t> gray) {
  if (gray.size() != size.area()) throw Error("bad-dims", "gray buffer does not match dimensions");
  png_image image = blank_image(size, PNG_FORMAT_LINEAR_Y);
  return write_png(image, gray.data(), 0);
}

Bytes encode_mask_png(const BinaryMask& m) {
  std::vector<std::uint8_t> gray(m.data().begin(), m.data().end());
  for (auto& v : gray) v = v ? 255 : 0;
  return encode_png_gray8(m.size(), gray);
}

BinaryMask decode_mask_png(std::span<const std::uint8_t> bytes) {
  Size size;
  auto gray = decode_gray8(bytes, &size);
  for (auto& v : gray) v = v >= 128 ? 1 : 0;
  return BinaryMask(size, std::move(gray));
}

Bytes encode_labels_png(const RegionLabeling& labels) {
  std::vector<std::uint16_t> data(labels.labels.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (labels.labels[i] > std::numeric_limits<std::uint16_t>::max()) {
      throw Error("label-overflow", "label does not fit in 16 bits");
    }
    data[i] = static_cast<std::uint16_t>(labels.labels[i]);
  }
  return encode_png_gray16(labels.size, data);
}

RegionLabeling decode_labels_png(std::span<const std::uint8_t> bytes) {
  if (!is_png(bytes)) undecodable("labelings are stored as PNG");
  PngReader reader(bytes);
  reader.image.format = PNG_FORMAT_LINEAR_Y;
  RegionLabeling out;
  out.size = {static_cast<int>(reader.image.width), static_cast<int>(reader.image.height)};
  std::vector<std::uint16_t> data(out.size.area());
  if (!png_image_finish_read(&reader.image, nullptr, data.data(), 0, nullptr)) {
    undecodable(reader.image.message);
  }
  out.labels.assign(data.begin(), data.end());
  for (auto l : out.labels) out.region_count = std::max(out.region_count, static_cast<int>(l));
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("file-not-found", path.string(), ErrorCategory::io);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write-failed", tmp.string(), ErrorCategory::io);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write-failed", tmp.string(), ErrorCategory::io);
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RgbImage load_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

BinaryMask load_mask(const std::filesystem::path& path) { return decode_mask_png(read_file(path)); }

void save_mask(const std::filesystem::path& path, const BinaryMask& m) {
  write_file_atomic(path, encode_mask_png(m));
}

void save_image(const std::filesystem::path& path, const RgbImage& img) {
  write_file_atomic(path, encode_png(img));
}

}  // namespace fcxl

#include "oodagent/image.hpp"

#include "oodagent/error.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

namespace oodagent {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::invalid_input, "negative image size");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  data_[i] = c.r;
  data_[i + 1] = c.g;
  data_[i + 2] = c.b;
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width_);
  y1 = std::min(y1, height_);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) set(x, y, c);
}

void Image::blit(const Image& src, int ox, int oy) {
  for (int y = 0; y < src.height(); ++y) {
    int ty = oy + y;
    if (ty < 0 || ty >= height_) continue;
    for (int x = 0; x < src.width(); ++x) {
      int tx = ox + x;
      if (tx < 0 || tx >= width_) continue;
      set(tx, ty, src.at(x, y));
    }
  }
}

Image Image::crop(const BBox& box) const {
  int x0 = std::clamp(box.x0, 0, width_), x1 = std::clamp(box.x1, 0, width_);
  int y0 = std::clamp(box.y0, 0, height_), y1 = std::clamp(box.y1, 0, height_);
  Image out(std::max(0, x1 - x0), std::max(0, y1 - y0));
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.set(x, y, at(x0 + x, y0 + y));
  return out;
}

Image Image::from_bytes(int width, int height, std::vector<std::uint8_t> data) {
  if (width < 0 || height < 0 || data.size() != static_cast<std::size_t>(width) * height * 3)
    throw Error(ErrorCode::invalid_input, "raster byte count does not match geometry");
  Image img;
  img.width_ = width;
  img.height_ = height;
  img.data_ = std::move(data);
  return img;
}

Mask::Mask(int width, int height)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

Mask Mask::from_box(const BBox& box, int width, int height) {
  Mask m(width, height);
  for (int y = std::max(box.y0, 0); y < std::min(box.y1, height); ++y)
    for (int x = std::max(box.x0, 0); x < std::min(box.x1, width); ++x) m.set(x, y, true);
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::optional<BBox> Mask::bounds() const {
  int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (get(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return BBox{x0, y0, x1 + 1, y1 + 1, 1.0};
}

std::size_t Mask::intersection(const Mask& other) const {
  if (other.width_ != width_ || other.height_ != height_) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) n += (bits_[i] & other.bits_[i]);
  return n;
}

std::vector<std::uint8_t> Mask::pack() const {
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  return out;
}

Mask Mask::unpack(int width, int height, std::span<const std::uint8_t> packed) {
  Mask m(width, height);
  if (packed.size() != (m.bits_.size() + 7) / 8)
    throw Error(ErrorCode::invalid_input, "packed mask size does not match geometry");
  for (std::size_t i = 0; i < m.bits_.size(); ++i) m.bits_[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return m;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng prints to stderr by default; failures surface as Error instead.
void png_fail(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void png_quiet(png_structp, png_const_charp) {}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::invalid_input, "cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_quiet);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::invalid_input, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::invalid_input, "png encode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto bytes = image.bytes();
  for (int y = 0; y < image.height(); ++y) {
    auto row = const_cast<std::uint8_t*>(bytes.data() + static_cast<std::size_t>(y) * image.width() * 3);
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::load_failure, "cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_quiet);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::load_failure, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::load_failure, "corrupt png: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) png_read_row(png, data.data() + static_cast<std::size_t>(y) * w * 3, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return Image::from_bytes(w, h, std::move(data));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::protocol_error, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::protocol_error, "invalid base64");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace oodagent

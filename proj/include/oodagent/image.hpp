#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oodagent {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Pixel box, half-open: [x0, x1) x [y0, y1). An absent detection is
// std::nullopt, never a zero-sized box.
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double score = 0.0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool valid_in(int image_w, int image_h) const {
    return x0 < x1 && y0 < y1 && x0 >= 0 && y0 >= 0 && x1 <= image_w && y1 <= image_h;
  }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

// Row-major 8-bit RGB raster.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  // Copies `src` with its top-left corner at (x, y), clipped to this image.
  void blit(const Image& src, int x, int y);
  Image crop(const BBox& box) const;

  std::span<const std::uint8_t> bytes() const { return data_; }
  static Image from_bytes(int width, int height, std::vector<std::uint8_t> data);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0, height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Binary pixel mask with the same geometry as the image it annotates.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);
  static Mask from_box(const BBox& box, int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  // Tight bounding box of the set pixels, if any.
  std::optional<BBox> bounds() const;
  std::size_t intersection(const Mask& other) const;

  // Packed little-endian bit string, 8 pixels per byte.
  std::vector<std::uint8_t> pack() const;
  static Mask unpack(int width, int height, std::span<const std::uint8_t> packed);

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0, height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Lossless PNG file I/O.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace oodagent

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace csot {

/// Interleaved 8-bit RGB image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  std::uint8_t* pixel(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* pixel(int x, int y) const { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::uint8_t* p = pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Reads any format OpenCV understands; grayscale inputs are expanded to RGB.
Image load_image(const std::filesystem::path& path);
/// Writes a lossless image (format from the extension, PNG recommended).
void save_image(const Image& image, const std::filesystem::path& path);

/// Lexicographically sorted image files (png, jpg, bmp, ppm, pgm) in a directory.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

/// Rotates by 90 degrees counter-clockwise.
Image rotate90(const Image& image);

}  // namespace csot

#include "csot/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cstring>

#include "csot/error.hpp"

namespace csot {

Image load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw FormatError(FormatError::Kind::Io, "cannot read image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image image(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(image.pixel(0, y), rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
  }
  return image;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) {
    throw FormatError(FormatError::Kind::Io, "cannot write image " + path.string());
  }
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
  static constexpr std::array<const char*, 7> kExtensions = {".png", ".jpg", ".jpeg", ".bmp",
                                                            ".ppm", ".pgm", ".tif"};
  std::vector<std::filesystem::path> frames;
  if (!std::filesystem::is_directory(dir)) {
    throw FormatError(FormatError::Kind::Io, "not a directory: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (std::find(kExtensions.begin(), kExtensions.end(), ext) != kExtensions.end()) {
      frames.push_back(entry.path());
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

Image rotate90(const Image& image) {
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* p = image.pixel(x, y);
      out.set(y, image.width - 1 - x, p[0], p[1], p[2]);
    }
  }
  return out;
}

}  // namespace csot

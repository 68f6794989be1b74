#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace postscan {

/// Row-major RGB8 image. pixels().size() == width * height * 3.
class ImageBuffer {
 public:
  using Pixel = std::array<std::uint8_t, 3>;

  ImageBuffer() = default;
  /// Zero-filled buffer.
  ImageBuffer(int width, int height);
  /// Throws std::invalid_argument if pixels.size() != width * height * 3.
  ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  bool empty() const { return pixel_count() == 0; }

  std::uint8_t& at(int x, int y, int channel) { return data_[offset(x, y) + channel]; }
  std::uint8_t at(int x, int y, int channel) const { return data_[offset(x, y) + channel]; }

  Pixel pixel(int x, int y) const {
    const auto o = offset(x, y);
    return {data_[o], data_[o + 1], data_[o + 2]};
  }
  void set_pixel(int x, int y, Pixel p) {
    const auto o = offset(x, y);
    data_[o] = p[0];
    data_[o + 1] = p[1];
    data_[o + 2] = p[2];
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Binary PPM (P6, maxval 255). Throws DataError on anything else.
ImageBuffer read_ppm(const std::filesystem::path& path);
ImageBuffer decode_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const std::filesystem::path& path, const ImageBuffer& image);

/// Dispatches on extension. Only .ppm is supported; other formats raise DataError.
ImageBuffer load_image(const std::filesystem::path& path);

}  // namespace postscan

#include "postscan/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "postscan/common.hpp"

namespace postscan {

ImageBuffer::ImageBuffer(int width, int height) : ImageBuffer(width, height, {}) {
  data_.assign(pixel_count() * 3, 0);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), data_(std::move(pixels)) {
  if (width < 0 || height < 0) throw std::invalid_argument("image dimensions must be non-negative");
  if (!data_.empty() && data_.size() != pixel_count() * 3)
    throw std::invalid_argument("pixel buffer size does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
  if (data_.empty() && pixel_count() != 0) data_.assign(pixel_count() * 3, 0);
}

namespace {

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
    if (out.empty()) throw DataError("truncated PPM header");
    return out;
  }

  long number() {
    const auto t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw DataError("bad PPM header field '" + t + "'");
    return std::stol(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw DataError("truncated PPM header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ImageBuffer decode_ppm(std::span<const std::uint8_t> bytes) {
  PpmHeaderReader reader(bytes);
  if (reader.token() != "P6") throw DataError("not a binary PPM (P6) image");
  const long width = reader.number();
  const long height = reader.number();
  const long maxval = reader.number();
  if (maxval != 255) throw DataError("only 8-bit PPM (maxval 255) is supported");
  if (width <= 0 || height <= 0 || width > 1 << 15 || height > 1 << 15)
    throw DataError("unsupported PPM dimensions");
  const std::size_t start = reader.raster_start();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() - start < need) throw DataError("truncated PPM raster");
  std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(start + need));
  return ImageBuffer(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image " + path.string());
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto bytes = image.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing image " + path.string());
}

ImageBuffer load_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ppm") return read_ppm(path);
  throw DataError("unsupported image format '" + ext + "' for " + path.string() + " (PPM P6 only)");
}

}  // namespace postscan

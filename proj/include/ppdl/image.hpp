#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ppdl {

/// 8-bit image, row-major, channels interleaved (1 = gray, 3 = RGB).
struct ImageTensor {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  ImageTensor() = default;
  ImageTensor(int w, int h, int c, std::uint8_t fill = 0);

  std::size_t size() const { return pixels.size(); }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  /// Throws BadImage when dimensions and buffer length disagree.
  void validate() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

ImageTensor crop(const ImageTensor& img, int x0, int y0, int w, int h);

/// Nearest-neighbour resize; keeps every output value an exact input value.
ImageTensor resize_nearest(const ImageTensor& img, int width, int height);

/// Channel average (rounded) for RGB input; gray input is returned unchanged.
ImageTensor to_gray(const ImageTensor& img);

/// True for .png, .pgm, .ppm (case-insensitive).
bool is_image_path(const std::filesystem::path& path);

/// Reads 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette; alpha dropped,
/// 16-bit reduced) or binary PGM/PPM. Throws BadImage with the path.
ImageTensor read_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG. Output bytes depend only on the image.
void write_png(const std::filesystem::path& path, const ImageTensor& img);

/// Writes binary PGM (P5) or PPM (P6) depending on channel count.
void write_pnm(const std::filesystem::path& path, const ImageTensor& img);

/// Dispatches on extension: .png or .pgm/.ppm.
void write_image(const std::filesystem::path& path, const ImageTensor& img);

std::vector<std::uint8_t> encode_png(const ImageTensor& img);
ImageTensor decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");

}  // namespace ppdl

#include "ppdl/image.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

#include "ppdl/error.hpp"

namespace ppdl {
namespace fs = std::filesystem;

ImageTensor::ImageTensor(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {
  validate();
}

void ImageTensor::validate() const {
  if (width <= 0 || height <= 0) throw Error(Errc::BadImage, "non-positive image dimensions");
  if (channels != 1 && channels != 3) throw Error(Errc::BadImage, "channels must be 1 or 3");
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(Errc::BadImage, "pixel buffer length does not match dimensions");
  }
}

ImageTensor crop(const ImageTensor& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width || y0 + h > img.height) {
    throw Error(Errc::BadImage, "crop window outside image");
  }
  ImageTensor out(w, h, img.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    }
  }
  return out;
}

ImageTensor resize_nearest(const ImageTensor& img, int width, int height) {
  if (img.width == width && img.height == height) return img;
  ImageTensor out(width, height, img.channels);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>((static_cast<long long>(y) * 2 + 1) * img.height / (2LL * height));
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>((static_cast<long long>(x) * 2 + 1) * img.width / (2LL * width));
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

ImageTensor to_gray(const ImageTensor& img) {
  if (img.channels == 1) return img;
  ImageTensor out(img.width, img.height, 1);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    unsigned sum = img.pixels[3 * i] + img.pixels[3 * i + 1] + img.pixels[3 * i + 2];
    out.pixels[i] = static_cast<std::uint8_t>((sum + 1) / 3);
  }
  return out;
}

bool is_image_path(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm";
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::BadImage, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

// --- PNM ------------------------------------------------------------------

ImageTensor decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> int {
    skip_space();
    long v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && v < 1'000'000) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw Error(Errc::BadImage, name + ": malformed PNM header");
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(Errc::BadImage, name + ": not a binary PGM/PPM");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const int w = read_int();
  const int h = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw Error(Errc::BadImage, name + ": only 8-bit PNM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error(Errc::BadImage, name + ": malformed PNM header");
  ++pos;
  if (w <= 0 || h <= 0) throw Error(Errc::BadImage, name + ": bad dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos < n) throw Error(Errc::BadImage, name + ": truncated PNM data");
  ImageTensor img;
  img.width = w;
  img.height = h;
  img.channels = channels;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

// --- PNG ------------------------------------------------------------------

struct PngReadSource {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + count > src->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->bytes->data() + src->offset, count);
  src->offset += count;
}

void png_write_to_memory(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw_error(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

}  // namespace

ImageTensor decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error(Errc::BadImage, name + ": not a PNG");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_throw_error, png_ignore_warning);
  if (!png) throw Error(Errc::BadImage, name + ": libpng init failed");
  png_infop info = png_create_info_struct(png);
  PngReadSource src{&bytes, 0};
  ImageTensor img;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::BadImage, name + ": " + (err.empty() ? "corrupt PNG" : err));
  }
  png_set_read_fn(png, &src, png_read_from_memory);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) png_error(png, "unsupported channel layout");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  rows.resize(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<std::uint8_t> encode_png(const ImageTensor& img) {
  img.validate();
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_throw_error, png_ignore_warning);
  if (!png) throw Error(Errc::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoError, "PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, png_write_to_memory, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageTensor read_image(const fs::path& path) {
  std::vector<std::uint8_t> bytes = read_bytes(path);
  ImageTensor img = (bytes.size() >= 2 && bytes[0] == 'P') ? decode_pnm(bytes, path.string())
                                                           : decode_png(bytes, path.string());
  img.validate();
  return img;
}

void write_png(const fs::path& path, const ImageTensor& img) { write_bytes(path, encode_png(img)); }

void write_pnm(const fs::path& path, const ImageTensor& img) {
  img.validate();
  std::ostringstream header;
  header << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  write_bytes(path, bytes);
}

void write_image(const fs::path& path, const ImageTensor& img) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm" || ext == ".ppm") {
    write_pnm(path, img);
  } else {
    write_png(path, img);
  }
}

}  // namespace ppdl

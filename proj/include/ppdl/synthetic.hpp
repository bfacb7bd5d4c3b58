#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppdl/image.hpp"

namespace ppdl::synthetic {

/// Procedural texture classes: horizontal stripes, vertical stripes,
/// checkerboard and concentric rings. Each class has its own background and
/// foreground intensity (`levels[class] = {background, foreground}`); period
/// and phase are random per image, and `noise` is the fraction of pixels
/// replaced by uniform random values.
struct TextureSpec {
  int size = 64;
  int per_class = 400;
  double noise = 0.15;
  std::array<std::array<std::uint8_t, 2>, 4> levels = {{{40, 200}, {70, 230}, {20, 150}, {100, 250}}};
  std::uint64_t seed = 2024;
};

const std::vector<std::string>& texture_class_names();

ImageTensor make_texture(int cls, const TextureSpec& spec, std::uint64_t index);

/// Writes `<root>/<class>/<class>_<index>.png` for every class and index.
void write_texture_dataset(const std::filesystem::path& root, const TextureSpec& spec);

/// Constant-intensity images in two bands (dark: [20, 80], bright: [170, 230]),
/// written as `<root>/{dark,bright}/...png`.
void write_two_band_dataset(const std::filesystem::path& root, int size, int per_class, std::uint64_t seed);

}  // namespace ppdl::synthetic

#include "ppdl/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "parallel.hpp"
#include "ppdl/error.hpp"
#include "ppdl/rng.hpp"

namespace ppdl::synthetic {

namespace fs = std::filesystem;

const std::vector<std::string>& texture_class_names() {
  static const std::vector<std::string> names = {"checker", "rings", "stripes_h", "stripes_v"};
  return names;
}

ImageTensor make_texture(int cls, const TextureSpec& spec, std::uint64_t index) {
  if (cls < 0 || cls > 3) throw Error(Errc::BadArgument, "texture class must be in [0, 4)");
  Rng rng(mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(cls)), index));
  const int half = 4 + static_cast<int>(rng.below(5));  // half period in [4, 8]
  const int phase_x = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(half)));
  const int phase_y = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(half)));
  const double cx = spec.size * (0.25 + 0.5 * rng.uniform());
  const double cy = spec.size * (0.25 + 0.5 * rng.uniform());
  const std::uint8_t low = spec.levels[static_cast<std::size_t>(cls)][0];
  const std::uint8_t high = spec.levels[static_cast<std::size_t>(cls)][1];

  ImageTensor img(spec.size, spec.size, 1);
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      bool on = false;
      switch (cls) {
        case 0: on = (((x + phase_x) / half) + ((y + phase_y) / half)) % 2 == 0; break;
        case 1: on = static_cast<int>(std::hypot(x - cx, y - cy) / half) % 2 == 0; break;
        case 2: on = ((y + phase_y) / half) % 2 == 0; break;
        case 3: on = ((x + phase_x) / half) % 2 == 0; break;
      }
      std::uint8_t v = on ? high : low;
      if (rng.uniform() < spec.noise) v = static_cast<std::uint8_t>(rng.below(256));
      img.at(x, y) = v;
    }
  }
  return img;
}

void write_texture_dataset(const fs::path& root, const TextureSpec& spec) {
  const auto& names = texture_class_names();
  for (const auto& n : names) fs::create_directories(root / n);
  const std::size_t total = names.size() * static_cast<std::size_t>(spec.per_class);
  detail::parallel_for(total, [&](std::size_t i) {
    const int cls = static_cast<int>(i / static_cast<std::size_t>(spec.per_class));
    const auto idx = i % static_cast<std::size_t>(spec.per_class);
    char file[64];
    std::snprintf(file, sizeof(file), "%s_%04zu.png", names[static_cast<std::size_t>(cls)].c_str(), idx);
    write_png(root / names[static_cast<std::size_t>(cls)] / file, make_texture(cls, spec, idx));
  });
}

void write_two_band_dataset(const fs::path& root, int size, int per_class, std::uint64_t seed) {
  const char* names[2] = {"bright", "dark"};
  for (int cls = 0; cls < 2; ++cls) {
    fs::create_directories(root / names[cls]);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
    for (int i = 0; i < per_class; ++i) {
      const int base = cls == 0 ? 170 : 20;
      ImageTensor img(size, size, 1, static_cast<std::uint8_t>(base + rng.below(61)));
      char file[64];
      std::snprintf(file, sizeof(file), "%s_%03d.png", names[cls], i);
      write_png(root / names[cls] / file, img);
    }
  }
}

}  // namespace ppdl::synthetic

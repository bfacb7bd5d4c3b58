#include "ppdl/image.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "ppdl/error.hpp"
#include "ppdl/rng.hpp"

namespace {

namespace fs = std::filesystem;
using ppdl::Errc;
using ppdl::ImageTensor;

ImageTensor random_image(int w, int h, int c, std::uint64_t seed) {
  ImageTensor img(w, h, c);
  ppdl::Rng rng(seed);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("ppdl_image_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ImageTensorTest, ValidateRejectsInconsistentBuffers) {
  ImageTensor img(4, 3, 1);
  EXPECT_NO_THROW(img.validate());
  img.pixels.pop_back();
  try {
    img.validate();
    FAIL();
  } catch (const ppdl::Error& e) {
    EXPECT_EQ(e.code(), Errc::BadImage);
  }
  EXPECT_THROW(ImageTensor(2, 2, 2), ppdl::Error);
  EXPECT_THROW(ImageTensor(0, 2, 1), ppdl::Error);
}

TEST(ImageTensorTest, InterleavedLayout) {
  ImageTensor img(2, 2, 3);
  img.at(1, 0, 2) = 9;
  EXPECT_EQ(img.pixels[5], 9);
  img.at(0, 1, 0) = 7;
  EXPECT_EQ(img.pixels[6], 7);
}

TEST(CropTest, CopiesWindow) {
  const ImageTensor img = random_image(8, 6, 1, 1);
  const ImageTensor c = crop(img, 2, 1, 3, 4);
  ASSERT_EQ(c.width, 3);
  ASSERT_EQ(c.height, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 3; ++x) EXPECT_EQ(c.at(x, y), img.at(x + 2, y + 1));
  }
  EXPECT_THROW(crop(img, 6, 0, 3, 1), ppdl::Error);
}

TEST(ResizeTest, NearestKeepsValuesAndIdentity) {
  const ImageTensor img = random_image(10, 7, 1, 2);
  EXPECT_EQ(resize_nearest(img, 10, 7), img);
  const ImageTensor up = resize_nearest(img, 20, 14);
  for (int y = 0; y < 14; ++y) {
    for (int x = 0; x < 20; ++x) EXPECT_EQ(up.at(x, y), img.at(x / 2, y / 2));
  }
  const ImageTensor down = resize_nearest(up, 10, 7);
  EXPECT_EQ(down, img);
}

TEST(ToGrayTest, AveragesChannels) {
  ImageTensor rgb(1, 1, 3);
  rgb.pixels = {10, 20, 31};
  EXPECT_EQ(to_gray(rgb).pixels[0], 20);
  ImageTensor g(1, 1, 1, 5);
  EXPECT_EQ(to_gray(g), g);
}

TEST(ImagePathTest, Extensions) {
  EXPECT_TRUE(ppdl::is_image_path("a/b.PNG"));
  EXPECT_TRUE(ppdl::is_image_path("x.pgm"));
  EXPECT_TRUE(ppdl::is_image_path("x.ppm"));
  EXPECT_FALSE(ppdl::is_image_path("x.jpg"));
  EXPECT_FALSE(ppdl::is_image_path("png"));
}

TEST(ImageIoTest, PngRoundTripGrayAndRgb) {
  const fs::path dir = temp_dir("png");
  for (int c : {1, 3}) {
    const ImageTensor img = random_image(13, 9, c, 10 + c);
    const fs::path p = dir / ("img" + std::to_string(c) + ".png");
    write_image(p, img);
    EXPECT_EQ(ppdl::read_image(p), img);
    EXPECT_EQ(ppdl::decode_png(ppdl::encode_png(img)), img);
  }
}

TEST(ImageIoTest, PngBytesAreReproducible) {
  const ImageTensor img = random_image(16, 16, 1, 3);
  EXPECT_EQ(ppdl::encode_png(img), ppdl::encode_png(img));
}

TEST(ImageIoTest, PnmRoundTrip) {
  const fs::path dir = temp_dir("pnm");
  const ImageTensor gray = random_image(5, 4, 1, 5);
  const ImageTensor rgb = random_image(5, 4, 3, 6);
  write_image(dir / "g.pgm", gray);
  write_image(dir / "c.ppm", rgb);
  EXPECT_EQ(ppdl::read_image(dir / "g.pgm"), gray);
  EXPECT_EQ(ppdl::read_image(dir / "c.ppm"), rgb);
}

TEST(ImageIoTest, CorruptFilesRaiseBadImage) {
  const fs::path dir = temp_dir("bad");
  {
    std::ofstream(dir / "junk.png") << "not a png at all";
  }
  auto bytes = ppdl::encode_png(random_image(8, 8, 1, 4));
  bytes.resize(bytes.size() / 2);
  {
    std::ofstream f(dir / "trunc.png", std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  {
    std::ofstream(dir / "short.pgm", std::ios::binary) << "P5\n4 4\n255\n\x01\x02";
  }
  for (const char* name : {"junk.png", "trunc.png", "short.pgm", "missing.png"}) {
    try {
      ppdl::read_image(dir / name);
      ADD_FAILURE() << name;
    } catch (const ppdl::Error& e) {
      EXPECT_EQ(e.code(), Errc::BadImage) << name;
      EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
    }
  }
}

}  // namespace

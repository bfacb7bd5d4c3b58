// Writes the procedural texture dataset used by the tests and the README walkthrough.
#include <iostream>

#include "CLI11.hpp"
#include "ppdl/error.hpp"
#include "ppdl/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a procedural 4-class texture image dataset"};
  std::string out;
  ppdl::synthetic::TextureSpec spec;
  app.add_option("out", out, "Output directory")->required();
  app.add_option("--size", spec.size, "Image side length")->check(CLI::Range(8, 4096));
  app.add_option("--per-class", spec.per_class, "Images per class")->check(CLI::PositiveNumber);
  app.add_option("--noise", spec.noise, "Fraction of pixels replaced by uniform noise")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", spec.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    ppdl::synthetic::write_texture_dataset(out, spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::cout << "wrote " << 4 * spec.per_class << " images to " << out << '\n';
  return 0;
}

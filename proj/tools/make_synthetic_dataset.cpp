// Writes N synthetic RGB PNGs for smoke training and evaluation.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sain/image_io.hpp"
#include "sain/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic PNG dataset"};
  std::string dir;
  std::size_t count = 4, height = 96, width = 96;
  std::uint64_t seed = 1;
  app.add_option("--out-dir", dir)->required();
  app.add_option("--count", count);
  app.add_option("--height", height);
  app.add_option("--width", width);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);
  try {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "img%03zu.png", i);
      sain::write_png(std::filesystem::path(dir) / name, sain::synthetic_image(height, width, seed + i));
    }
  } catch (const std::exception& e) {
    std::cerr << "make_synthetic_dataset: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

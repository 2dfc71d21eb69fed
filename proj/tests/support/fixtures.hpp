#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "edgeroute/image.hpp"

namespace fixtures {

inline edgeroute::Image random_image(std::mt19937& gen, int w, int h, int lo = 0, int hi = 255) {
  std::uniform_int_distribution<int> d(lo, hi);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (auto& v : px) v = static_cast<std::uint8_t>(d(gen));
  return edgeroute::Image(w, h, std::move(px));
}

/// Random mask with a few filled rectangles, so boundaries are non-trivial.
inline edgeroute::Mask random_mask(std::mt19937& gen, int w, int h) {
  edgeroute::Mask m(w, h);
  std::uniform_int_distribution<int> count(0, 3);
  std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
  const int k = count(gen);
  for (int r = 0; r < k; ++r) {
    int x0 = xs(gen), x1 = xs(gen), y0 = ys(gen), y1 = ys(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m.set(x, y, true);
  }
  // Sprinkle isolated pixels as well.
  std::bernoulli_distribution speck(0.05);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (speck(gen)) m.set(x, y, !m.at(x, y));
  return m;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("edgeroute_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures

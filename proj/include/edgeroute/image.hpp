#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgeroute/error.hpp"

namespace edgeroute {

/// Row-major 2-D grid. The value type decides what the grid means; the
/// domain types below wrap it with their own invariants.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    check_shape(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_shape(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      fail(ErrorKind::Dimension,
           "grid data has " + std::to_string(data_.size()) +
               " elements, expected " + std::to_string(width) + "x" +
               std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  /// Border-replicating accessor; coordinates are clamped into the grid.
  const T& clamped(int x, int y) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static void check_shape(int width, int height) {
    if (width < 1 || height < 1) {
      fail(ErrorKind::Dimension, "grid dimensions must be positive, got " +
                                     std::to_string(width) + "x" +
                                     std::to_string(height));
    }
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// 8-bit grayscale image. Intensities are bounded by the storage type.
using Image = Grid<std::uint8_t>;

/// Edge-enhanced image. Shares the image representation so that edge outputs
/// can be fed to anything that consumes an Image.
using EdgeImage = Image;

/// Signed per-pixel filter response before normalization.
using ResponseMap = Grid<std::int32_t>;

/// Per-pixel probability map in [0, 1].
using ProbabilityMap = Grid<double>;

/// Binary segmentation mask. Construction rejects non-binary values.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height) : grid_(width, height, 0) {}
  Mask(int width, int height, std::vector<std::uint8_t> bits)
      : grid_(width, height, std::move(bits)) {
    for (auto v : grid_.values()) {
      if (v > 1) fail(ErrorKind::Format, "mask values must be 0 or 1");
    }
  }

  int width() const noexcept { return grid_.width(); }
  int height() const noexcept { return grid_.height(); }
  std::size_t size() const noexcept { return grid_.size(); }

  bool at(int x, int y) const { return grid_.at(x, y) != 0; }
  void set(int x, int y, bool on) { grid_.at(x, y) = on ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return grid_.values(); }
  std::size_t count() const noexcept {
    return static_cast<std::size_t>(
        std::count(grid_.values().begin(), grid_.values().end(), 1));
  }

  template <typename U>
  bool same_shape(const Grid<U>& g) const noexcept {
    return grid_.same_shape(g);
  }
  bool same_shape(const Mask& m) const noexcept {
    return grid_.same_shape(m.grid_);
  }

  /// 0/255 image for writing to disk.
  Image to_image() const {
    Image img(width(), height());
    auto src = grid_.values();
    auto dst = img.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
    return img;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Grid<std::uint8_t> grid_;
};

inline void require_same_shape(const Mask& a, const Mask& b,
                               std::string_view what) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::Dimension,
         std::string(what) + ": shape mismatch " + std::to_string(a.width()) +
             "x" + std::to_string(a.height()) + " vs " +
             std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

/// Clockwise quarter turn. Output is height x width.
template <typename T>
Grid<T> rotate90(const Grid<T>& src) {
  Grid<T> out(src.height(), src.width());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      out.at(src.height() - 1 - y, x) = src.at(x, y);
  return out;
}

}  // namespace edgeroute

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "edgeroute/error.hpp"
#include "edgeroute/image.hpp"
#include "edgeroute/io.hpp"
#include "edgeroute/manifest.hpp"
#include "edgeroute/random.hpp"

namespace edgeroute {

enum class Shape { Disks, Rectangles, Blobs };
enum class Texture { Flat, GaussianNoise, Gradient };

inline Shape parse_shape(std::string_view s) {
  if (s == "disks") return Shape::Disks;
  if (s == "rectangles") return Shape::Rectangles;
  if (s == "blobs") return Shape::Blobs;
  fail(ErrorKind::Config, "unknown shape family '" + std::string(s) + "'");
}

inline Texture parse_texture(std::string_view s) {
  if (s == "flat") return Texture::Flat;
  if (s == "gaussian-noise" || s == "noise") return Texture::GaussianNoise;
  if (s == "gradient") return Texture::Gradient;
  fail(ErrorKind::Config, "unknown texture '" + std::string(s) + "'");
}

/// One synthetic population. Foreground intensity is background + contrast;
/// `noise_sigma` adds Gaussian noise on top of any texture.
struct SynthSpec {
  std::string name;  // file-name prefix; defaults to the modality tag
  std::string modality;
  int n_images = 10;
  Shape shape = Shape::Disks;
  Texture texture = Texture::Flat;
  double noise_sigma = 0.0;
  double contrast = 100.0;
  double background = 60.0;
  double gradient = 120.0;  // ramp amplitude across the image (Gradient only)
  int width = 128;
  int height = 128;
  std::uint64_t seed = 1;

  std::string prefix() const { return name.empty() ? modality : name; }
};

struct SynthSample {
  Image image;
  Mask gt;
};

namespace detail {

inline void paint_disk(Mask& m, double cx, double cy, double r) {
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) m.set(x, y, true);
    }
}

inline Mask draw_shape(const SynthSpec& s, Rng& rng) {
  Mask m(s.width, s.height);
  const double size = std::min(s.width, s.height);
  switch (s.shape) {
    case Shape::Disks: {
      const double r = rng.uniform(0.12, 0.25) * size;
      const double cx = rng.uniform(r + 3, s.width - r - 4);
      const double cy = rng.uniform(r + 3, s.height - r - 4);
      paint_disk(m, cx, cy, r);
      break;
    }
    case Shape::Rectangles: {
      const int rw = static_cast<int>(rng.uniform(0.2, 0.5) * s.width);
      const int rh = static_cast<int>(rng.uniform(0.2, 0.5) * s.height);
      const int x0 = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, s.width - rw - 6))));
      const int y0 = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, s.height - rh - 6))));
      for (int y = y0; y < std::min(s.height, y0 + rh); ++y)
        for (int x = x0; x < std::min(s.width, x0 + rw); ++x) m.set(x, y, true);
      break;
    }
    case Shape::Blobs: {
      const double cx = rng.uniform(0.35, 0.65) * s.width;
      const double cy = rng.uniform(0.35, 0.65) * s.height;
      for (int k = 0; k < 3; ++k) {
        const double r = rng.uniform(0.08, 0.16) * size;
        paint_disk(m, cx + rng.uniform(-0.12, 0.12) * size, cy + rng.uniform(-0.12, 0.12) * size, r);
      }
      break;
    }
  }
  return m;
}

}  // namespace detail

/// Draws the next sample of a population from `rng`.
inline SynthSample draw_sample(const SynthSpec& s, Rng& rng) {
  Mask gt = detail::draw_shape(s, rng);
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const double ux = std::cos(angle), uy = std::sin(angle);
  // Ramp spans [0, 1] over the image's extent along the chosen direction.
  const double span = std::fabs(ux) * (s.width - 1) + std::fabs(uy) * (s.height - 1);
  const double origin = std::min(0.0, ux * (s.width - 1)) + std::min(0.0, uy * (s.height - 1));
  Image img(s.width, s.height);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      double v = s.background;
      if (s.texture == Texture::Gradient && span > 0.0)
        v += s.gradient * ((ux * x + uy * y - origin) / span);
      if (gt.at(x, y)) v += s.contrast;
      if (s.noise_sigma > 0.0) v += s.noise_sigma * rng.normal();
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  return {std::move(img), std::move(gt)};
}

/// Writes `images/<prefix>_NNNN.png` and `masks/<prefix>_NNNN.png` under
/// `out_dir` and returns their manifest entries.
inline DatasetManifest generate_entries(const SynthSpec& s, const fs::path& out_dir) {
  if (s.n_images < 1) fail(ErrorKind::Config, "synthetic population needs n_images >= 1");
  if (s.modality.empty()) fail(ErrorKind::Config, "synthetic population needs a modality");
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "masks", ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  Rng rng(s.seed ^ fnv1a(s.prefix()));
  DatasetManifest m;
  for (int i = 0; i < s.n_images; ++i) {
    const auto sample = draw_sample(s, rng);
    char stem[256];
    std::snprintf(stem, sizeof stem, "%s_%04d", s.prefix().c_str(), i);
    ManifestEntry e;
    e.image = out_dir / "images" / (std::string(stem) + ".png");
    e.gt = out_dir / "masks" / (std::string(stem) + ".png");
    e.modality = s.modality;
    save_image(sample.image, e.image);
    save_mask(sample.gt, e.gt);
    m.entries.push_back(std::move(e));
  }
  return m;
}

/// Generates every population into one directory with a combined
/// `manifest.csv`.
inline DatasetManifest generate(const std::vector<SynthSpec>& specs, const fs::path& out_dir) {
  DatasetManifest all;
  for (const auto& s : specs) {
    auto part = generate_entries(s, out_dir);
    all.entries.insert(all.entries.end(), part.entries.begin(), part.entries.end());
  }
  save_manifest(all, out_dir / "manifest.csv");
  return all;
}

inline DatasetManifest generate(const SynthSpec& spec, const fs::path& out_dir) {
  return generate(std::vector<SynthSpec>{spec}, out_dir);
}

}  // namespace edgeroute

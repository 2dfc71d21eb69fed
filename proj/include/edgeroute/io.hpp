#pragma once

#include <png.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "edgeroute/error.hpp"
#include "edgeroute/image.hpp"

namespace edgeroute {

namespace fs = std::filesystem;

/// BT.601 luma with round-half-up, in integer arithmetic.
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

/// Mask binarization: strictly above 127 is foreground.
constexpr bool mask_bit(std::uint8_t intensity) { return intensity > 127; }

/// Decoded raster before grayscale policy is applied.
struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3
  std::vector<std::uint8_t> samples;
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "read failed: " + path.string());
  return bytes;
}

inline void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G',
                                                       '\r', '\n', 0x1a, '\n'};

inline bool is_png(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 &&
         std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin());
}

inline bool is_pgm(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5';
}

// PNM header token reader; skips whitespace and '#' comments.
inline long pnm_token(const std::vector<std::uint8_t>& b, std::size_t& pos,
                      const std::string& name) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= b.size() || !std::isdigit(b[pos]))
    fail(ErrorKind::Format, "PGM header: bad " + name);
  long v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos++] - '0');
    if (v > (1L << 30)) fail(ErrorKind::Format, "PGM header: " + name + " too large");
  }
  return v;
}

inline RawRaster decode_pgm(const std::vector<std::uint8_t>& b, const std::string& origin) {
  std::size_t pos = 2;
  const long w = pnm_token(b, pos, "width");
  const long h = pnm_token(b, pos, "height");
  const long maxval = pnm_token(b, pos, "maxval");
  if (w < 1 || h < 1) fail(ErrorKind::Format, origin + ": PGM has empty dimensions");
  if (maxval != 255)
    fail(ErrorKind::Format, origin + ": unsupported PGM maxval " + std::to_string(maxval) +
                                " (only 8-bit, maxval 255)");
  if (pos >= b.size() || !std::isspace(b[pos]))
    fail(ErrorKind::Format, origin + ": PGM header not terminated");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (b.size() - pos < n) fail(ErrorKind::Format, origin + ": truncated PGM raster");
  RawRaster r{static_cast<int>(w), static_cast<int>(h), 1, {}};
  r.samples.assign(b.begin() + static_cast<std::ptrdiff_t>(pos),
                   b.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return r;
}

inline std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

inline RawRaster decode_png(const std::vector<std::uint8_t>& b, const std::string& origin) {
  // IHDR is mandated to be the first chunk; check depth and color type there
  // because the simplified libpng API silently expands everything.
  if (b.size() < 33 || std::memcmp(b.data() + 12, "IHDR", 4) != 0)
    fail(ErrorKind::Format, origin + ": malformed PNG header");
  const int bit_depth = b[24];
  const int color_type = b[25];
  if (bit_depth != 8)
    fail(ErrorKind::Format, origin + ": unsupported PNG bit depth " + std::to_string(bit_depth));
  bool gray = false;
  switch (color_type) {
    case 0: case 4: gray = true; break;
    case 2: case 6: gray = false; break;
    default:
      fail(ErrorKind::Format, origin + ": unsupported PNG color type " + std::to_string(color_type));
  }

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, b.data(), b.size()))
    fail(ErrorKind::Format, origin + ": " + img.message);
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  // Alpha-carrying inputs are read as their color planes only.
  if (color_type == 4) img.format = PNG_FORMAT_GA;
  if (color_type == 6) img.format = PNG_FORMAT_RGBA;
  const int src_channels = static_cast<int>(PNG_IMAGE_SAMPLE_CHANNELS(img.format));
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorKind::Format, origin + ": " + msg);
  }
  RawRaster r{static_cast<int>(img.width), static_cast<int>(img.height), gray ? 1 : 3, {}};
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  r.samples.resize(n * r.channels);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < r.channels; ++c) r.samples[i * r.channels + c] = buf[i * src_channels + c];
  return r;
}

}  // namespace detail

inline RawRaster decode_raster(const std::vector<std::uint8_t>& bytes,
                               const std::string& origin = "<memory>") {
  if (detail::is_png(bytes)) return detail::decode_png(bytes, origin);
  if (detail::is_pgm(bytes)) return detail::decode_pgm(bytes, origin);
  fail(ErrorKind::Format, origin + ": not a P5 PGM or PNG file");
}

/// Grayscale view of a raster; single-channel input passes through unchanged.
inline Image to_grayscale(const RawRaster& r) {
  if (r.channels == 1) return Image(r.width, r.height, r.samples);
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(r.width) * r.height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = luma(r.samples[3 * i], r.samples[3 * i + 1], r.samples[3 * i + 2]);
  }
  return Image(r.width, r.height, std::move(gray));
}

inline Image load_image(const fs::path& path) {
  return to_grayscale(decode_raster(detail::read_file(path), path.string()));
}

inline Mask load_mask(const fs::path& path) {
  const RawRaster r = decode_raster(detail::read_file(path), path.string());
  if (r.channels != 1)
    fail(ErrorKind::Format, path.string() + ": mask must be single-channel");
  std::vector<std::uint8_t> bits(r.samples.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = mask_bit(r.samples[i]) ? 1 : 0;
  return Mask(r.width, r.height, std::move(bits));
}

inline std::vector<std::uint8_t> encode_pgm(const Image& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.values().begin(), img.values().end());
  return out;
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  png_image p;
  std::memset(&p, 0, sizeof p);
  p.version = PNG_IMAGE_VERSION;
  p.width = static_cast<png_uint_32>(img.width());
  p.height = static_cast<png_uint_32>(img.height());
  p.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&p, nullptr, &size, 0, img.values().data(), 0, nullptr))
    fail(ErrorKind::Format, std::string("PNG encode: ") + p.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&p, out.data(), &size, 0, img.values().data(), 0, nullptr))
    fail(ErrorKind::Format, std::string("PNG encode: ") + p.message);
  out.resize(size);
  return out;
}

/// Writes PGM for a `.pgm` extension and PNG otherwise.
inline void save_image(const Image& img, const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  const auto ext = path.extension().string();
  detail::write_file(path, (ext == ".pgm" || ext == ".PGM") ? encode_pgm(img) : encode_png(img));
}

inline void save_mask(const Mask& mask, const fs::path& path) {
  save_image(mask.to_image(), path);
}

}  // namespace edgeroute

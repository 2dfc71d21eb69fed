#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgeroute/error.hpp"
#include "edgeroute/image.hpp"

namespace edgeroute {

enum class EdgeKind { Kirsch, Sobel, Prewitt };

inline std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Kirsch: return "kirsch";
    case EdgeKind::Sobel: return "sobel";
    case EdgeKind::Prewitt: return "prewitt";
  }
  return "?";
}

inline EdgeKind parse_edge_kind(std::string_view s) {
  if (s == "kirsch") return EdgeKind::Kirsch;
  if (s == "sobel") return EdgeKind::Sobel;
  if (s == "prewitt") return EdgeKind::Prewitt;
  fail(ErrorKind::Usage, "unknown edge operator '" + std::string(s) + "'");
}

/// 3x3 stencil indexed [row][col]; applied as a correlation (dot product with
/// the neighbourhood, no flip).
using Stencil = std::array<std::array<std::int32_t, 3>, 3>;

/// Compass ring positions clockwise from north-west, as (dx, dy).
inline constexpr std::array<std::pair<int, int>, 8> kRing = {
    {{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};

/// Moves every outer coefficient one step clockwise (a 45 degree turn).
constexpr Stencil rotate45(const Stencil& k) {
  Stencil out{};
  out[1][1] = k[1][1];
  for (std::size_t i = 0; i < 8; ++i) {
    const auto [sx, sy] = kRing[i];
    const auto [dx, dy] = kRing[(i + 1) % 8];
    out[dy + 1][dx + 1] = k[sy + 1][sx + 1];
  }
  return out;
}

constexpr Stencil kKirschNorth = {{{5, 5, 5}, {-3, 0, -3}, {-3, -3, -3}}};
constexpr Stencil kSobelX = {{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
constexpr Stencil kSobelY = {{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};
constexpr Stencil kPrewittX = {{{-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}}};
constexpr Stencil kPrewittY = {{{-1, -1, -1}, {0, 0, 0}, {1, 1, 1}}};

/// Default output scale per operator: maps the largest possible single
/// response (Kirsch 15*255, Sobel axis 4*255, Prewitt axis 3*255) onto 255.
constexpr double default_scale(EdgeKind k) {
  switch (k) {
    case EdgeKind::Kirsch: return 1.0 / 15.0;
    case EdgeKind::Sobel: return 1.0 / 4.0;
    case EdgeKind::Prewitt: return 1.0 / 3.0;
  }
  return 1.0;
}

struct EdgeOperator {
  EdgeKind kind;
  std::vector<Stencil> kernels;

  static EdgeOperator make(EdgeKind kind) {
    EdgeOperator op{kind, {}};
    switch (kind) {
      case EdgeKind::Kirsch: {
        Stencil k = kKirschNorth;
        for (int i = 0; i < 8; ++i) {
          op.kernels.push_back(k);
          k = rotate45(k);
        }
        break;
      }
      case EdgeKind::Sobel: op.kernels = {kSobelX, kSobelY}; break;
      case EdgeKind::Prewitt: op.kernels = {kPrewittX, kPrewittY}; break;
    }
    return op;
  }
};

/// One stencil applied everywhere with replicate padding.
inline ResponseMap correlate(const Image& img, const Stencil& k) {
  ResponseMap out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      std::int32_t acc = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          acc += k[dy + 1][dx + 1] * static_cast<std::int32_t>(img.clamped(x + dx, y + dy));
      out.at(x, y) = acc;
    }
  return out;
}

/// Raw Kirsch response: per pixel, max over the 8 compass kernels.
///
/// Every compass kernel has 5 on three consecutive ring cells and -3 on the
/// other five, so its response is 8*S - 3*T with S the three-cell window sum
/// and T the ring sum. The max therefore only needs the largest window.
inline ResponseMap kirsch_response(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  ResponseMap out(w, h);
  std::array<std::int32_t, 8> ring{};
  for (int y = 0; y < h; ++y) {
    const bool inner_row = y > 0 && y < h - 1;
    for (int x = 0; x < w; ++x) {
      if (inner_row && x > 0 && x < w - 1) {
        for (std::size_t i = 0; i < 8; ++i) ring[i] = img.at(x + kRing[i].first, y + kRing[i].second);
      } else {
        for (std::size_t i = 0; i < 8; ++i)
          ring[i] = img.clamped(x + kRing[i].first, y + kRing[i].second);
      }
      std::int32_t total = 0;
      for (auto v : ring) total += v;
      std::int32_t best = ring[0] + ring[1] + ring[2];
      std::int32_t window = best;
      for (std::size_t i = 1; i < 8; ++i) {
        window += ring[(i + 2) % 8] - ring[i - 1];
        best = std::max(best, window);
      }
      out.at(x, y) = 8 * best - 3 * total;
    }
  }
  return out;
}

/// Horizontal and vertical responses of a two-stencil gradient operator.
inline std::pair<ResponseMap, ResponseMap> gradient_components(const Image& img, EdgeKind kind) {
  if (kind == EdgeKind::Kirsch) fail(ErrorKind::Usage, "Kirsch is a compass operator, not a gradient pair");
  const auto op = EdgeOperator::make(kind);
  return {correlate(img, op.kernels[0]), correlate(img, op.kernels[1])};
}

namespace detail {
inline std::uint8_t to_intensity(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}
inline void check_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) fail(ErrorKind::Usage, "edge scale must be positive");
}
}  // namespace detail

inline EdgeImage kirsch_enhance(const Image& img, double scale = default_scale(EdgeKind::Kirsch)) {
  detail::check_scale(scale);
  const auto raw = kirsch_response(img);
  EdgeImage out(img.width(), img.height());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.values()[i] = detail::to_intensity(raw.values()[i] * scale);
  return out;
}

inline EdgeImage gradient_enhance(const Image& img, EdgeKind kind, double scale) {
  detail::check_scale(scale);
  const auto [gx, gy] = gradient_components(img, kind);
  EdgeImage out(img.width(), img.height());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double a = gx.values()[i];
    const double b = gy.values()[i];
    out.values()[i] = detail::to_intensity(std::sqrt(a * a + b * b) * scale);
  }
  return out;
}

inline EdgeImage sobel_enhance(const Image& img, double scale = default_scale(EdgeKind::Sobel)) {
  return gradient_enhance(img, EdgeKind::Sobel, scale);
}

inline EdgeImage prewitt_enhance(const Image& img, double scale = default_scale(EdgeKind::Prewitt)) {
  return gradient_enhance(img, EdgeKind::Prewitt, scale);
}

/// Dispatch by operator; an unset scale picks the operator default.
inline EdgeImage enhance(const Image& img, EdgeKind kind, std::optional<double> scale = std::nullopt) {
  const double s = scale.value_or(default_scale(kind));
  switch (kind) {
    case EdgeKind::Kirsch: return kirsch_enhance(img, s);
    case EdgeKind::Sobel: return sobel_enhance(img, s);
    case EdgeKind::Prewitt: return prewitt_enhance(img, s);
  }
  return kirsch_enhance(img, s);
}

}  // namespace edgeroute

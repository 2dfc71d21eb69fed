#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "edgeroute/error.hpp"
#include "edgeroute/image.hpp"

namespace edgeroute {

/// Default NSD tolerance in pixels.
inline constexpr double kDefaultTau = 2.0;

struct Score {
  double dsc = 0.0;
  double nsd = 0.0;
  double perf = 0.0;  // 100 * (dsc + nsd) / 2
};

struct LossValue {
  double bce = 0.0;
  double dice = 0.0;
  double iou = 0.0;
  double total = 0.0;
};

inline double dsc(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "dsc");
  std::size_t inter = 0, np = 0, ng = 0;
  const auto a = pred.bits();
  const auto b = gt.bits();
  for (std::size_t i = 0; i < a.size(); ++i) {
    np += a[i];
    ng += b[i];
    inter += a[i] & b[i];
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

/// Foreground pixels with at least one background 4-neighbour; outside the
/// grid counts as background.
inline Mask boundary(const Mask& m) {
  Mask out(m.width(), m.height());
  const int w = m.width(), h = m.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m.at(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !m.at(x - 1, y) ||
                        !m.at(x + 1, y) || !m.at(x, y - 1) || !m.at(x, y + 1);
      if (edge) out.set(x, y, true);
    }
  return out;
}

namespace detail {
// Lower envelope of parabolas, one dimension of the separable exact squared
// EDT (Felzenszwalb & Huttenlocher).
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == inf) continue;
    if (f[v[k]] == inf) {
      v[k] = q;
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = f[v[k]] == inf ? inf : dq * dq + f[v[k]];
  }
}
}  // namespace detail

/// Exact squared Euclidean distance from every pixel to the nearest set
/// pixel of `seeds`. Infinity everywhere when `seeds` is empty.
inline Grid<double> squared_distance_transform(const Mask& seeds) {
  const int w = seeds.width(), h = seeds.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Grid<double> out(w, h, inf);
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = seeds.at(x, y) ? 0.0 : inf;
    detail::edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) out.at(x, y) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(w);
    d.resize(w);
    for (int x = 0; x < w; ++x) f[x] = out.at(x, y);
    detail::edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) out.at(x, y) = d[x];
  }
  return out;
}

/// Symmetric normalized surface distance at tolerance `tau` (pixels).
inline double nsd(const Mask& pred, const Mask& gt, double tau = kDefaultTau) {
  require_same_shape(pred, gt, "nsd");
  if (!(tau >= 0.0)) fail(ErrorKind::Usage, "nsd tolerance must be non-negative");
  const bool pe = pred.count() == 0;
  const bool ge = gt.count() == 0;
  if (pe && ge) return 1.0;
  if (pe || ge) return 0.0;
  const Mask bp = boundary(pred);
  const Mask bg = boundary(gt);
  const auto dp = squared_distance_transform(bp);
  const auto dg = squared_distance_transform(bg);
  // Squared distances are integers; the slack only absorbs tau*tau rounding.
  const double limit = tau * tau + 1e-9;
  std::size_t hit = 0, total = 0;
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) {
      if (bp.at(x, y)) {
        ++total;
        hit += dg.at(x, y) <= limit;
      }
      if (bg.at(x, y)) {
        ++total;
        hit += dp.at(x, y) <= limit;
      }
    }
  return static_cast<double>(hit) / static_cast<double>(total);
}

inline Score perf(const Mask& pred, const Mask& gt, double tau = kDefaultTau) {
  Score s;
  s.dsc = dsc(pred, gt);
  s.nsd = nsd(pred, gt, tau);
  s.perf = 100.0 * (s.dsc + s.nsd) / 2.0;
  return s;
}

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kLossSmooth = 1.0;

/// BCE + soft Dice + soft IoU against a binary target.
inline LossValue loss(const ProbabilityMap& prob, const Mask& gt) {
  if (!gt.same_shape(prob)) fail(ErrorKind::Dimension, "loss: shape mismatch");
  double bce = 0.0, inter = 0.0, sp = 0.0, sg = 0.0;
  const auto p = prob.values();
  const auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0)) fail(ErrorKind::Format, "loss: probability outside [0, 1]");
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    bce -= g[i] ? std::log(q) : std::log(1.0 - q);
    inter += p[i] * g[i];
    sp += p[i];
    sg += g[i];
  }
  LossValue l;
  l.bce = bce / static_cast<double>(p.size());
  l.dice = 1.0 - (2.0 * inter + kLossSmooth) / (sp + sg + kLossSmooth);
  l.iou = 1.0 - (inter + kLossSmooth) / (sp + sg - inter + kLossSmooth);
  // Rounding can leave -0 or a tiny negative on a perfect prediction.
  l.dice = std::max(l.dice, 0.0);
  l.iou = std::max(l.iou, 0.0);
  l.total = l.bce + l.dice + l.iou;
  return l;
}

/// Loss of a hard mask, read as a 0/1 probability map.
inline LossValue loss(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt, "loss");
  std::vector<double> p(pred.bits().begin(), pred.bits().end());
  return loss(ProbabilityMap(pred.width(), pred.height(), std::move(p)), gt);
}

}  // namespace edgeroute

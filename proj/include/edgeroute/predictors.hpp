#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edgeroute/edge.hpp"
#include "edgeroute/error.hpp"
#include "edgeroute/features.hpp"
#include "edgeroute/image.hpp"
#include "edgeroute/io.hpp"
#include "edgeroute/manifest.hpp"

namespace edgeroute {

/// Otsu threshold: the t maximizing between-class variance when splitting
/// into {v <= t} and {v > t}. The first maximizer wins. Empty when no split
/// separates anything (single occupied intensity).
inline std::optional<int> otsu_threshold(const Image& img) {
  const auto h = histogram(img);
  const double n = static_cast<double>(img.size());
  double total = 0.0;
  for (int i = 0; i < 256; ++i) total += static_cast<double>(i) * h[i];
  double w0 = 0.0, s0 = 0.0, best = 0.0;
  std::optional<int> best_t;
  for (int t = 0; t < 255; ++t) {
    w0 += h[t];
    s0 += static_cast<double>(t) * h[t];
    const double w1 = n - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = s0 / w0 - (total - s0) / w1;
    const double between = w0 * w1 * diff * diff;
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

inline Mask threshold_above(const Image& img, std::optional<int> t) {
  Mask m(img.width(), img.height());
  if (!t) return m;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m.set(x, y, img.at(x, y) > *t);
  return m;
}

/// Sets every background pixel not 4-connected to the image border.
inline Mask fill_holes(const Mask& m) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> outside(m.size(), 0);
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int x, int y) {
    const auto i = static_cast<std::size_t>(y) * w + x;
    if (!m.at(x, y) && !outside[i]) {
      outside[i] = 1;
      stack.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    if (x > 0) seed(x - 1, y);
    if (x < w - 1) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y < h - 1) seed(x, y + 1);
  }
  Mask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, !outside[static_cast<std::size_t>(y) * w + x]);
  return out;
}

enum class PredictorKind { PrecomputedMasks, ThresholdOtsu, EdgeAssistedThreshold };

/// Opaque mask provider. Stands in for a trained segmenter: either replays
/// masks produced elsewhere or runs a built-in toy segmenter.
class Predictor {
 public:
  /// Masks stored as `<dir>/<image-stem>.png`.
  static Predictor precomputed(fs::path dir, std::string id = {}) {
    Predictor p(PredictorKind::PrecomputedMasks, id.empty() ? "masks:" + dir.string() : id);
    p.dir_ = std::move(dir);
    return p;
  }

  /// Masks named per image by a manifest column (`pred_raw` or `pred_edge`).
  static Predictor from_manifest_column(const DatasetManifest& m, const std::string& column) {
    if (column != "pred_raw" && column != "pred_edge")
      fail(ErrorKind::Usage, "unknown prediction column '" + column + "'");
    Predictor p(PredictorKind::PrecomputedMasks, "manifest:" + column);
    p.paths_.emplace();
    for (const auto& e : m.entries) {
      const auto& path = column == "pred_raw" ? e.pred_raw : e.pred_edge;
      if (path) (*p.paths_)[e.id()] = *path;
    }
    return p;
  }

  static Predictor threshold_otsu() { return Predictor(PredictorKind::ThresholdOtsu, "otsu"); }

  static Predictor edge_assisted(EdgeKind op = EdgeKind::Kirsch,
                                 std::optional<double> scale = std::nullopt) {
    Predictor p(PredictorKind::EdgeAssistedThreshold,
                op == EdgeKind::Kirsch ? "edge-otsu" : "edge-otsu:" + std::string(to_string(op)));
    p.op_ = op;
    p.scale_ = scale;
    return p;
  }

  /// Predictor from its textual form: `otsu`, `edge-otsu`, `masks:<dir>`,
  /// `manifest:pred_raw` / `manifest:pred_edge`. A bare existing directory
  /// is read as `masks:<dir>`.
  static Predictor parse(const std::string& spec, const DatasetManifest* manifest = nullptr,
                         EdgeKind op = EdgeKind::Kirsch, std::optional<double> scale = std::nullopt) {
    if (spec == "otsu") return threshold_otsu();
    if (spec == "edge-otsu") return edge_assisted(op, scale);
    if (spec.rfind("masks:", 0) == 0) return precomputed(spec.substr(6));
    if (spec.rfind("manifest:", 0) == 0) {
      if (!manifest) fail(ErrorKind::Usage, "predictor '" + spec + "' needs a manifest");
      return from_manifest_column(*manifest, spec.substr(9));
    }
    if (fs::is_directory(spec)) return precomputed(spec);
    fail(ErrorKind::Usage, "unknown predictor '" + spec + "'");
  }

  PredictorKind kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }

  Mask predict(const Image& image, const std::string& image_id) const {
    switch (kind_) {
      case PredictorKind::ThresholdOtsu:
        return threshold_above(image, otsu_threshold(image));
      case PredictorKind::EdgeAssistedThreshold: {
        const EdgeImage edges = enhance(image, op_, scale_);
        const Mask rim = threshold_above(edges, otsu_threshold(edges));
        if (rim.count() == 0) return rim;
        return fill_holes(rim);
      }
      case PredictorKind::PrecomputedMasks: {
        fs::path path;
        if (paths_) {
          const auto it = paths_->find(image_id);
          if (it == paths_->end()) fail(ErrorKind::Lookup, "no precomputed mask for '" + image_id + "'");
          path = it->second;
        } else {
          path = dir_ / (image_id + ".png");
        }
        if (!fs::is_regular_file(path))
          fail(ErrorKind::Lookup, "no precomputed mask for '" + image_id + "' at " + path.string());
        Mask m = load_mask(path);
        if (m.width() != image.width() || m.height() != image.height())
          fail(ErrorKind::Dimension, "precomputed mask for '" + image_id + "' has the wrong shape");
        return m;
      }
    }
    fail(ErrorKind::Usage, "unknown predictor kind");
  }

 private:
  Predictor(PredictorKind kind, std::string id) : kind_(kind), id_(std::move(id)) {}

  PredictorKind kind_;
  std::string id_;
  fs::path dir_;
  std::optional<std::map<std::string, fs::path>> paths_;
  EdgeKind op_ = EdgeKind::Kirsch;
  std::optional<double> scale_;
};

struct BatchFailure {
  std::string image_id;
  std::string message;
};

struct BatchResult {
  std::vector<std::pair<std::string, Mask>> masks;
  std::vector<BatchFailure> failures;
};

/// Runs the predictor over a manifest in order. Per-image library errors are
/// collected rather than thrown.
inline BatchResult predict_batch(const Predictor& p, const DatasetManifest& m) {
  BatchResult out;
  for (const auto& e : m.entries) {
    try {
      out.masks.emplace_back(e.id(), p.predict(load_image(e.image), e.id()));
    } catch (const Error& err) {
      out.failures.push_back({e.id(), err.what()});
    }
  }
  return out;
}

}  // namespace edgeroute

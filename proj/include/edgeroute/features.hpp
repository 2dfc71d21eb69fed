#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "edgeroute/error.hpp"
#include "edgeroute/image.hpp"

namespace edgeroute {

/// Meta-feature vector of a raw image.
struct FeatureVector {
  double sigma = 0.0;    // intensity units, [0, 127.5]
  double entropy = 0.0;  // bits, [0, 8]

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class Feature { Sigma, Entropy };

inline std::string_view to_string(Feature f) { return f == Feature::Sigma ? "sigma" : "entropy"; }

inline Feature parse_feature(std::string_view s) {
  if (s == "sigma") return Feature::Sigma;
  if (s == "entropy") return Feature::Entropy;
  fail(ErrorKind::Format, "unknown feature '" + std::string(s) + "'");
}

inline double value_of(const FeatureVector& v, Feature f) {
  return f == Feature::Sigma ? v.sigma : v.entropy;
}

/// Population standard deviation (divisor m*n), two-pass.
inline double std_dev(const Image& img) {
  const auto px = img.values();
  double sum = 0.0;
  for (auto v : px) sum += v;
  const double mean = sum / static_cast<double>(px.size());
  double ss = 0.0;
  for (auto v : px) {
    const double d = v - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(px.size()));
}

inline std::array<std::uint64_t, 256> histogram(const Image& img) {
  std::array<std::uint64_t, 256> h{};
  for (auto v : img.values()) ++h[v];
  return h;
}

/// Shannon entropy in bits of the 256-bin intensity histogram.
inline double entropy(const Image& img) {
  const auto h = histogram(img);
  const double n = static_cast<double>(img.size());
  double e = 0.0;
  for (auto c : h) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    e -= p * std::log2(p);
  }
  // A single occupied bin gives -1*log2(1) = -0.0; normalise the sign.
  return e + 0.0;
}

inline FeatureVector extract_features(const Image& raw) { return {std_dev(raw), entropy(raw)}; }

}  // namespace edgeroute

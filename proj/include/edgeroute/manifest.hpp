#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "edgeroute/csv.hpp"
#include "edgeroute/error.hpp"
#include "edgeroute/random.hpp"

namespace edgeroute {

namespace fs = std::filesystem;

/// Modality tags accepted when the caller declares nothing else.
inline const std::vector<std::string>& default_modalities() {
  static const std::vector<std::string> tags = {
      "Dermoscopy", "Fundus", "Mammography", "Microscopy", "OCT", "US", "XRay"};
  return tags;
}

struct ManifestEntry {
  fs::path image;
  fs::path gt;
  std::string modality;
  std::optional<fs::path> pred_raw;
  std::optional<fs::path> pred_edge;

  /// Image stem; the key for precomputed mask lookup and all per-image output.
  std::string id() const { return image.stem().string(); }

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  /// Modalities in order of first appearance.
  std::vector<std::string> modalities() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (std::find(out.begin(), out.end(), e.modality) == out.end()) out.push_back(e.modality);
    return out;
  }

  std::size_t count(const std::string& modality) const {
    return static_cast<std::size_t>(std::count_if(
        entries.begin(), entries.end(), [&](const auto& e) { return e.modality == modality; }));
  }
};

namespace detail {
inline fs::path resolve_existing(const fs::path& base, const std::string& cell,
                                 const std::string& what, std::size_t row) {
  if (cell.empty()) fail(ErrorKind::Format, "manifest row " + std::to_string(row) + ": empty " + what);
  fs::path p(cell);
  if (p.is_relative()) p = base / p;
  p = p.lexically_normal();
  if (!fs::is_regular_file(p))
    fail(ErrorKind::Io, "manifest row " + std::to_string(row) + ": " + what + " not found: " + p.string());
  return p;
}
}  // namespace detail

/// Reads `image,gt,modality[,pred_raw,pred_edge]`; relative paths resolve
/// against the manifest's directory. An empty `allowed` list means the
/// default modality set; a list containing "*" accepts any tag.
inline DatasetManifest load_manifest(const fs::path& path,
                                     const std::vector<std::string>& allowed = {}) {
  const auto table = csv::read(path);
  const int ci = table.require_column("image");
  const int cg = table.require_column("gt");
  const int cm = table.require_column("modality");
  const int cr = table.column("pred_raw");
  const int ce = table.column("pred_edge");
  const auto& tags = allowed.empty() ? default_modalities() : allowed;
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  DatasetManifest m;
  std::set<std::string> ids;
  std::size_t row = 1;
  for (const auto& r : table.rows) {
    ++row;
    ManifestEntry e;
    e.image = detail::resolve_existing(base, r[ci], "image", row);
    e.gt = detail::resolve_existing(base, r[cg], "gt", row);
    e.modality = r[cm];
    if (e.modality.empty())
      fail(ErrorKind::Format, "manifest row " + std::to_string(row) + ": empty modality");
    if (std::find(tags.begin(), tags.end(), "*") == tags.end() &&
        std::find(tags.begin(), tags.end(), e.modality) == tags.end())
      fail(ErrorKind::Format, "manifest row " + std::to_string(row) + ": undeclared modality '" +
                                  e.modality + "'");
    if (cr >= 0 && !r[cr].empty()) e.pred_raw = detail::resolve_existing(base, r[cr], "pred_raw", row);
    if (ce >= 0 && !r[ce].empty()) e.pred_edge = detail::resolve_existing(base, r[ce], "pred_edge", row);
    if (!ids.insert(e.id()).second)
      fail(ErrorKind::Format, "manifest row " + std::to_string(row) + ": duplicate image stem '" +
                                  e.id() + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

/// Writes paths relative to the manifest's own directory.
inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path base = fs::absolute(path.has_parent_path() ? path.parent_path() : fs::path("."));
  const bool preds = std::any_of(m.entries.begin(), m.entries.end(), [](const auto& e) {
    return e.pred_raw.has_value() || e.pred_edge.has_value();
  });
  auto rel = [&](const fs::path& p) {
    return fs::absolute(p).lexically_normal().lexically_relative(base).generic_string();
  };
  std::vector<std::string> header = {"image", "gt", "modality"};
  if (preds) header.insert(header.end(), {"pred_raw", "pred_edge"});
  csv::Writer w(path, header);
  for (const auto& e : m.entries) {
    std::vector<std::string> cells = {rel(e.image), rel(e.gt), e.modality};
    if (preds) {
      cells.push_back(e.pred_raw ? rel(*e.pred_raw) : "");
      cells.push_back(e.pred_edge ? rel(*e.pred_edge) : "");
    }
    w.row(cells);
  }
}

/// Per-modality seeded shuffle then prefix-take of ceil(fraction * count).
/// Both outputs keep the input order.
inline std::pair<DatasetManifest, DatasetManifest> stratified_split(const DatasetManifest& m,
                                                                    double fraction,
                                                                    std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    fail(ErrorKind::Split, "split fraction must lie in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < m.entries.size(); ++i) strata[m.entries[i].modality].push_back(i);

  std::vector<bool> first(m.entries.size(), false);
  for (auto& [tag, idx] : strata) {
    if (idx.size() < 2)
      fail(ErrorKind::Split, "modality '" + tag + "' has fewer than 2 entries");
    Rng rng(seed ^ fnv1a(tag));
    shuffle(idx.begin(), idx.end(), rng);
    // The epsilon absorbs representation error such as 0.7 * 10 = 7.000000000000001.
    const auto take = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(idx.size()) - 1e-9));
    for (std::size_t k = 0; k < take; ++k) first[idx[k]] = true;
  }
  std::pair<DatasetManifest, DatasetManifest> out;
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    (first[i] ? out.first : out.second).entries.push_back(m.entries[i]);
  return out;
}

}  // namespace edgeroute

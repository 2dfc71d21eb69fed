#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "edgeroute/csv.hpp"
#include "edgeroute/error.hpp"
#include "edgeroute/features.hpp"
#include "edgeroute/io.hpp"
#include "edgeroute/manifest.hpp"
#include "edgeroute/metrics.hpp"
#include "edgeroute/predictors.hpp"

namespace edgeroute {

/// Per-image comparison of the raw-pretrained and edge-pretrained pipelines.
struct EvalRecord {
  std::string image_id;
  std::string modality;
  FeatureVector features;
  double perf_raw = 0.0;
  double perf_edge = 0.0;
  double delta = 0.0;      // perf_edge - perf_raw
  double loss_raw = 0.0;   // total loss of the raw pipeline's mask
  double loss_edge = 0.0;

  /// 1 iff the edge pipeline is strictly better; ties prefer raw.
  int label() const noexcept { return delta > 0.0 ? 1 : 0; }

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

inline EvalRecord make_record(std::string image_id, std::string modality, FeatureVector f,
                              double perf_raw, double perf_edge, double loss_raw = 0.0,
                              double loss_edge = 0.0) {
  return {std::move(image_id), std::move(modality), f, perf_raw, perf_edge,
          perf_edge - perf_raw, loss_raw, loss_edge};
}

inline std::vector<EvalRecord> build_eval_records(const DatasetManifest& m, const Predictor& raw,
                                                  const Predictor& edge, double tau = kDefaultTau) {
  std::vector<EvalRecord> out;
  out.reserve(m.size());
  for (const auto& e : m.entries) {
    try {
      const Image img = load_image(e.image);
      const Mask gt = load_mask(e.gt);
      const Mask pr = raw.predict(img, e.id());
      const Mask pe = edge.predict(img, e.id());
      out.push_back(make_record(e.id(), e.modality, extract_features(img), perf(pr, gt, tau).perf,
                                perf(pe, gt, tau).perf, loss(pr, gt).total, loss(pe, gt).total));
    } catch (const Error& err) {
      fail(err.kind(), "image '" + e.id() + "': " + err.what());
    }
  }
  return out;
}

enum class RuleKind { AlwaysRaw, AlwaysEdge, Threshold };

/// Which side of the cutoff goes to the edge pipeline.
enum class Direction { EdgeAtOrAbove, RawAtOrAbove };

inline std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::AlwaysRaw: return "always_raw";
    case RuleKind::AlwaysEdge: return "always_edge";
    case RuleKind::Threshold: return "threshold";
  }
  return "?";
}

inline std::string_view to_string(Direction d) {
  return d == Direction::EdgeAtOrAbove ? "edge_at_or_above" : "raw_at_or_above";
}

struct ModalityRule {
  RuleKind kind = RuleKind::AlwaysRaw;
  Feature feature = Feature::Sigma;
  double cutoff = 0.0;
  Direction direction = Direction::EdgeAtOrAbove;

  static ModalityRule always_raw() { return {}; }
  static ModalityRule always_edge() { return {RuleKind::AlwaysEdge, Feature::Sigma, 0.0, Direction::EdgeAtOrAbove}; }
  static ModalityRule threshold(Feature f, double cutoff, Direction d) {
    return {RuleKind::Threshold, f, cutoff, d};
  }

  /// 0 selects the raw pipeline, 1 the edge pipeline.
  int decide(const FeatureVector& v) const noexcept {
    switch (kind) {
      case RuleKind::AlwaysRaw: return 0;
      case RuleKind::AlwaysEdge: return 1;
      case RuleKind::Threshold: {
        const bool above = value_of(v, feature) >= cutoff;
        return (direction == Direction::EdgeAtOrAbove) == above ? 1 : 0;
      }
    }
    return 0;
  }

  friend bool operator==(const ModalityRule& a, const ModalityRule& b) {
    if (a.kind != b.kind) return false;
    if (a.kind != RuleKind::Threshold) return true;
    return a.feature == b.feature && a.cutoff == b.cutoff && a.direction == b.direction;
  }
};

/// Meta-classifier: one rule per modality seen in training. Modalities
/// without a rule route to the raw pipeline.
struct RoutingRule {
  std::map<std::string, ModalityRule> rules;

  const ModalityRule& for_modality(const std::string& modality) const {
    static const ModalityRule fallback = ModalityRule::always_raw();
    const auto it = rules.find(modality);
    return it == rules.end() ? fallback : it->second;
  }

  friend bool operator==(const RoutingRule&, const RoutingRule&) = default;
};

inline int route(const RoutingRule& rule, const std::string& modality, const FeatureVector& f) {
  return rule.for_modality(modality).decide(f);
}

/// Performance realized by following `rule` on each record, averaged.
inline double realized_mean(const ModalityRule& rule, const std::vector<const EvalRecord*>& records) {
  double sum = 0.0;
  for (const auto* r : records) sum += rule.decide(r->features) ? r->perf_edge : r->perf_raw;
  return sum / static_cast<double>(records.size());
}

inline double realized_mean(const ModalityRule& rule, const std::vector<EvalRecord>& records) {
  std::vector<const EvalRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  return realized_mean(rule, ptrs);
}

/// All rules the discrete search considers for one modality, in tie-break
/// priority order: constants first, then thresholds by ascending cutoff
/// (sigma before entropy, edge-at-or-above before raw-at-or-above).
inline std::vector<ModalityRule> candidate_rules(const std::vector<const EvalRecord*>& records) {
  std::vector<ModalityRule> thresholds;
  for (Feature f : {Feature::Sigma, Feature::Entropy}) {
    std::vector<double> vals;
    for (const auto* r : records) vals.push_back(value_of(r->features, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const double mid = vals[i] + (vals[i + 1] - vals[i]) / 2.0;
      for (Direction d : {Direction::EdgeAtOrAbove, Direction::RawAtOrAbove})
        thresholds.push_back(ModalityRule::threshold(f, mid, d));
    }
  }
  std::stable_sort(thresholds.begin(), thresholds.end(), [](const auto& a, const auto& b) {
    return std::tie(a.cutoff, a.feature, a.direction) < std::tie(b.cutoff, b.feature, b.direction);
  });
  std::vector<ModalityRule> out = {ModalityRule::always_raw(), ModalityRule::always_edge()};
  out.insert(out.end(), thresholds.begin(), thresholds.end());
  return out;
}

/// Exhaustive search over candidate_rules(); a later candidate replaces the
/// incumbent only when strictly better.
inline ModalityRule train_modality(const std::vector<const EvalRecord*>& records) {
  if (records.empty()) fail(ErrorKind::Training, "no records for modality");
  ModalityRule best = ModalityRule::always_raw();
  double best_score = realized_mean(best, records);
  for (const auto& c : candidate_rules(records)) {
    const double s = realized_mean(c, records);
    if (s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

inline std::map<std::string, std::vector<const EvalRecord*>> group_by_modality(
    const std::vector<EvalRecord>& records) {
  std::map<std::string, std::vector<const EvalRecord*>> g;
  for (const auto& r : records) g[r.modality].push_back(&r);
  return g;
}

inline RoutingRule train_router(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorKind::Training, "cannot train a router on zero records");
  RoutingRule rule;
  for (const auto& [tag, recs] : group_by_modality(records)) rule.rules[tag] = train_modality(recs);
  return rule;
}

struct MetaPrediction {
  int choice = 0;
  Mask mask;
};

inline MetaPrediction meta_predict_detailed(const RoutingRule& rule, const Predictor& raw,
                                            const Predictor& edge, const Image& image,
                                            const std::string& modality,
                                            const std::string& image_id = {}) {
  const int choice = route(rule, modality, extract_features(image));
  return {choice, choice ? edge.predict(image, image_id) : raw.predict(image, image_id)};
}

inline Mask meta_predict(const RoutingRule& rule, const Predictor& raw, const Predictor& edge,
                         const Image& image, const std::string& modality,
                         const std::string& image_id = {}) {
  return meta_predict_detailed(rule, raw, edge, image, modality, image_id).mask;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kRuleSchemaVersion = 1;
inline constexpr std::string_view kRuleFormat = "edgeroute.routing-rule";

inline nlohmann::ordered_json to_json(const RoutingRule& rule) {
  nlohmann::ordered_json j;
  j["schema_version"] = kRuleSchemaVersion;
  j["format"] = kRuleFormat;
  j["fallback"] = to_string(RuleKind::AlwaysRaw);
  auto& rules = j["rules"] = nlohmann::ordered_json::object();
  for (const auto& [tag, r] : rule.rules) {
    nlohmann::ordered_json e;
    e["kind"] = to_string(r.kind);
    if (r.kind == RuleKind::Threshold) {
      e["feature"] = to_string(r.feature);
      e["cutoff"] = r.cutoff;
      e["direction"] = to_string(r.direction);
    }
    rules[tag] = e;
  }
  return j;
}

inline RoutingRule rule_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kRuleFormat)
      fail(ErrorKind::Format, "not a routing rule file");
    if (j.at("schema_version").get<int>() != kRuleSchemaVersion)
      fail(ErrorKind::Format, "unsupported routing rule schema_version");
    RoutingRule rule;
    for (const auto& [tag, e] : j.at("rules").items()) {
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "always_raw") {
        rule.rules[tag] = ModalityRule::always_raw();
      } else if (kind == "always_edge") {
        rule.rules[tag] = ModalityRule::always_edge();
      } else if (kind == "threshold") {
        const auto dir = e.at("direction").get<std::string>();
        if (dir != "edge_at_or_above" && dir != "raw_at_or_above")
          fail(ErrorKind::Format, "unknown rule direction '" + dir + "'");
        rule.rules[tag] = ModalityRule::threshold(
            parse_feature(e.at("feature").get<std::string>()), e.at("cutoff").get<double>(),
            dir == "edge_at_or_above" ? Direction::EdgeAtOrAbove : Direction::RawAtOrAbove);
      } else {
        fail(ErrorKind::Format, "unknown rule kind '" + kind + "'");
      }
    }
    return rule;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("routing rule: ") + e.what());
  }
}

inline void save_rule(const RoutingRule& rule, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << to_json(rule).dump(2) << '\n';
}

inline RoutingRule load_rule(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  return rule_from_json(j);
}

inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {"image",    "modality",  "sigma", "entropy",
                                                "perf_raw", "perf_edge", "delta", "label",
                                                "loss_raw", "loss_edge"};
  return cols;
}

inline void save_records(const std::vector<EvalRecord>& records, const fs::path& path) {
  csv::Writer w(path, record_columns());
  for (const auto& r : records)
    w.row({r.image_id, r.modality, csv::num(r.features.sigma), csv::num(r.features.entropy),
           csv::num(r.perf_raw), csv::num(r.perf_edge), csv::num(r.delta),
           std::to_string(r.label()), csv::num(r.loss_raw), csv::num(r.loss_edge)});
}

/// Reads a records CSV. `delta` is recomputed from the two performances and
/// must agree with the stored column.
inline std::vector<EvalRecord> load_records(const fs::path& path) {
  const auto t = csv::read(path);
  const int ci = t.require_column("image"), cm = t.require_column("modality");
  const int cs = t.require_column("sigma"), ce = t.require_column("entropy");
  const int cr = t.require_column("perf_raw"), cd = t.require_column("perf_edge");
  const int cdelta = t.column("delta");
  const int clr = t.column("loss_raw"), cle = t.column("loss_edge");
  std::vector<EvalRecord> out;
  for (const auto& row : t.rows) {
    auto num = [&](int c, const char* what) { return c < 0 ? 0.0 : csv::to_double(row[c], what); };
    auto r = make_record(row[ci], row[cm], {num(cs, "sigma"), num(ce, "entropy")},
                         num(cr, "perf_raw"), num(cd, "perf_edge"), num(clr, "loss_raw"),
                         num(cle, "loss_edge"));
    if (cdelta >= 0 && csv::to_double(row[cdelta], "delta") != r.delta)
      fail(ErrorKind::Format, path.string() + ": delta inconsistent for '" + r.image_id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace edgeroute

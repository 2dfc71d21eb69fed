#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgeroute/csv.hpp"
#include "edgeroute/error.hpp"
#include "edgeroute/features.hpp"
#include "edgeroute/router.hpp"
#include "edgeroute/stats.hpp"

namespace edgeroute {

inline constexpr double kSignificance = 0.05;

struct TTestResult {
  double mean_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Two-sided paired t-test on per-item differences with a 95% interval.
/// Zero spread gives p = 1 for an all-zero sample and p = 0 otherwise.
inline TTestResult paired_ttest(std::span<const double> diffs) {
  if (diffs.size() < 2) fail(ErrorKind::Sample, "paired t-test needs at least 2 differences");
  const double n = static_cast<double>(diffs.size());
  double sum = 0.0;
  for (double d : diffs) sum += d;
  const double mean = sum / n;
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult r;
  r.n = diffs.size();
  r.mean_diff = mean;
  if (sd == 0.0) {
    r.ci_low = r.ci_high = mean;
    r.p_value = mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  const double se = sd / std::sqrt(n);
  const double df = n - 1.0;
  r.p_value = stats::t_two_sided_p(mean / se, df);
  const double half = stats::t_quantile(0.975, df) * se;
  r.ci_low = mean - half;
  r.ci_high = mean + half;
  return r;
}

struct RegressionResult {
  Feature feature = Feature::Sigma;
  double coefficient = 0.0;  // delta points per feature unit
  double intercept = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Simple OLS of y on x; slope p-value from its t statistic with n - 2 df.
inline RegressionResult ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::Dimension, "regression: length mismatch");
  if (x.size() < 3) fail(ErrorKind::Sample, "regression needs at least 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorKind::Degenerate, "regression: feature is constant");
  RegressionResult r;
  r.n = x.size();
  r.coefficient = sxy / sxx;
  r.intercept = my - r.coefficient * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (r.intercept + r.coefficient * x[i]);
    sse += e * e;
  }
  const double se = std::sqrt(sse / (n - 2.0) / sxx);
  if (se == 0.0 || se < 1e-12 * std::fabs(r.coefficient)) {
    r.p_value = r.coefficient == 0.0 ? 1.0 : 0.0;
  } else {
    r.p_value = stats::t_two_sided_p(r.coefficient / se, n - 2.0);
  }
  return r;
}

inline RegressionResult regress_feature(const std::vector<EvalRecord>& records, Feature f) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(value_of(r.features, f));
    y.push_back(r.delta);
  }
  auto res = ols(x, y);
  res.feature = f;
  return res;
}

/// Significance stars: * p<0.05, ** p<0.01, *** p<0.001.
inline std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

struct ModalityReport {
  std::string modality;
  double perf_raw = 0.0;
  double perf_edge = 0.0;
  double perf_meta = 0.0;
  double delta = 0.0;
  double delta_rel = 0.0;       // percent
  double delta_meta = 0.0;
  double delta_rel_meta = 0.0;  // percent
  std::size_t n_images = 0;
};

inline double percent_of(double num, double den) {
  return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : 100.0 * num / den;
}

/// Report row from the three mean performances.
inline ModalityReport summarize(std::string modality, double perf_raw, double perf_edge,
                                double perf_meta, std::size_t n_images) {
  ModalityReport r;
  r.modality = std::move(modality);
  r.perf_raw = perf_raw;
  r.perf_edge = perf_edge;
  r.perf_meta = perf_meta;
  r.n_images = n_images;
  r.delta = perf_edge - perf_raw;
  r.delta_rel = percent_of(r.delta, perf_raw);
  const double best = std::max(perf_raw, perf_edge);
  r.delta_meta = perf_meta - best;
  r.delta_rel_meta = percent_of(r.delta_meta, best);
  return r;
}

/// Image-count-weighted combination of per-modality rows.
inline ModalityReport aggregate(const std::vector<ModalityReport>& rows,
                                std::string name = "Aggregated") {
  if (rows.empty()) fail(ErrorKind::Report, "nothing to aggregate");
  double wr = 0.0, we = 0.0, wm = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    const double w = static_cast<double>(r.n_images);
    wr += w * r.perf_raw;
    we += w * r.perf_edge;
    wm += w * r.perf_meta;
    n += r.n_images;
  }
  if (n == 0) fail(ErrorKind::Report, "aggregate over zero images");
  const double dn = static_cast<double>(n);
  return summarize(std::move(name), wr / dn, we / dn, wm / dn, n);
}

struct Report {
  std::vector<ModalityReport> modalities;  // sorted by tag
  ModalityReport aggregated;
};

/// `meta_perfs[i]` is the routed pipeline's performance on `records[i]`.
inline Report modality_report(const std::vector<EvalRecord>& records,
                              std::span<const double> meta_perfs) {
  if (records.empty()) fail(ErrorKind::Report, "empty record set");
  if (meta_perfs.size() != records.size())
    fail(ErrorKind::Report, "every record needs a meta performance");
  struct Acc {
    double raw = 0.0, edge = 0.0, meta = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& a = acc[records[i].modality];
    a.raw += records[i].perf_raw;
    a.edge += records[i].perf_edge;
    a.meta += meta_perfs[i];
    ++a.n;
  }
  Report rep;
  for (const auto& [tag, a] : acc) {
    const double n = static_cast<double>(a.n);
    rep.modalities.push_back(summarize(tag, a.raw / n, a.edge / n, a.meta / n, a.n));
  }
  rep.aggregated = aggregate(rep.modalities);
  return rep;
}

/// Meta performances implied by a rule: the routed pipeline's output is one
/// of the two pipelines' masks, so its score is that pipeline's score.
inline std::vector<double> routed_perfs(const RoutingRule& rule,
                                        const std::vector<EvalRecord>& records) {
  std::vector<double> out;
  for (const auto& r : records)
    out.push_back(route(rule, r.modality, r.features) ? r.perf_edge : r.perf_raw);
  return out;
}

struct ModalityTTest {
  std::string modality;
  TTestResult result;
};

/// Per-modality paired t-test on loss_edge - loss_raw.
inline std::vector<ModalityTTest> loss_ttests(const std::vector<EvalRecord>& records) {
  std::vector<ModalityTTest> out;
  for (const auto& [tag, recs] : group_by_modality(records)) {
    std::vector<double> d;
    for (const auto* r : recs) d.push_back(r->loss_edge - r->loss_raw);
    out.push_back({tag, paired_ttest(d)});
  }
  return out;
}

enum class Verdict { Supported, Contradicted, NotSignificant };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Supported: return "supported";
    case Verdict::Contradicted: return "contradicted";
    case Verdict::NotSignificant: return "not_significant";
  }
  return "?";
}

/// A positive, significant slope of delta on the feature supports the
/// hypothesis that a higher feature value favours the edge pipeline.
inline Verdict verdict_for(const RegressionResult& r, double alpha = kSignificance) {
  if (r.p_value >= alpha || r.coefficient == 0.0) return Verdict::NotSignificant;
  return r.coefficient > 0.0 ? Verdict::Supported : Verdict::Contradicted;
}

struct ModalityRegression {
  std::string modality;
  RegressionResult sigma;
  RegressionResult entropy;
};

struct HypothesisSummary {
  struct Row {
    std::string modality;
    Verdict h1;  // sigma
    Verdict h2;  // entropy
  };
  std::vector<Row> rows;
  bool h1_divergent = false;
  bool h2_divergent = false;
};

inline std::vector<ModalityRegression> regress_by_modality(const std::vector<EvalRecord>& records) {
  std::vector<ModalityRegression> out;
  for (const auto& [tag, recs] : group_by_modality(records)) {
    std::vector<EvalRecord> sub;
    for (const auto* r : recs) sub.push_back(*r);
    out.push_back({tag, regress_feature(sub, Feature::Sigma), regress_feature(sub, Feature::Entropy)});
  }
  return out;
}

inline HypothesisSummary summarize_hypotheses(const std::vector<ModalityRegression>& regs) {
  HypothesisSummary s;
  for (const auto& r : regs) s.rows.push_back({r.modality, verdict_for(r.sigma), verdict_for(r.entropy)});
  auto divergent = [&](auto pick) {
    for (const auto& row : s.rows)
      if (pick(row) != pick(s.rows.front())) return true;
    return false;
  };
  if (!s.rows.empty()) {
    s.h1_divergent = divergent([](const auto& r) { return r.h1; });
    s.h2_divergent = divergent([](const auto& r) { return r.h2; });
  }
  return s;
}

inline HypothesisSummary hypothesis_check(const std::vector<EvalRecord>& records) {
  return summarize_hypotheses(regress_by_modality(records));
}

// ---------------------------------------------------------------------------
// Output

inline constexpr int kReportSchemaVersion = 1;

namespace detail {
inline nlohmann::ordered_json num_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}
}  // namespace detail

inline nlohmann::ordered_json to_json(const ModalityReport& r) {
  nlohmann::ordered_json j;
  j["modality"] = r.modality;
  j["n_images"] = r.n_images;
  j["perf_raw"] = detail::num_or_null(r.perf_raw);
  j["perf_edge"] = detail::num_or_null(r.perf_edge);
  j["perf_meta"] = detail::num_or_null(r.perf_meta);
  j["delta"] = detail::num_or_null(r.delta);
  j["delta_rel_pct"] = detail::num_or_null(r.delta_rel);
  j["delta_meta"] = detail::num_or_null(r.delta_meta);
  j["delta_rel_meta_pct"] = detail::num_or_null(r.delta_rel_meta);
  return j;
}

inline nlohmann::ordered_json to_json(const Report& rep) {
  nlohmann::ordered_json j;
  auto& rows = j["modalities"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.modalities) rows.push_back(to_json(r));
  j["aggregated"] = to_json(rep.aggregated);
  return j;
}

inline nlohmann::ordered_json to_json(const TTestResult& t) {
  return {{"n", t.n},
          {"mean_diff", t.mean_diff},
          {"ci_low", t.ci_low},
          {"ci_high", t.ci_high},
          {"p_value", t.p_value}};
}

inline nlohmann::ordered_json to_json(const RegressionResult& r) {
  return {{"feature", std::string(to_string(r.feature))},
          {"coefficient", r.coefficient},
          {"intercept", r.intercept},
          {"p_value", r.p_value},
          {"n", r.n}};
}

/// Per-modality performance table, two decimals.
inline void save_report_csv(const Report& rep, const fs::path& path) {
  csv::Writer w(path, {"modality", "perf_raw", "perf_edge", "delta", "delta_rel_pct", "perf_meta",
                       "delta_meta", "delta_rel_meta_pct", "n_images"});
  auto row = [&](const ModalityReport& r) {
    w.row({r.modality, csv::fixed(r.perf_raw, 2), csv::fixed(r.perf_edge, 2), csv::fixed(r.delta, 2),
           csv::fixed(r.delta_rel, 2), csv::fixed(r.perf_meta, 2), csv::fixed(r.delta_meta, 2),
           csv::fixed(r.delta_rel_meta, 2), std::to_string(r.n_images)});
  };
  for (const auto& r : rep.modalities) row(r);
  row(rep.aggregated);
}

inline void save_ttests_csv(const std::vector<ModalityTTest>& tests, const fs::path& path) {
  csv::Writer w(path, {"modality", "n", "mean_diff", "ci_low", "ci_high", "p_value", "significant"});
  for (const auto& t : tests)
    w.row({t.modality, std::to_string(t.result.n), csv::num(t.result.mean_diff),
           csv::num(t.result.ci_low), csv::num(t.result.ci_high), csv::num(t.result.p_value),
           t.result.p_value < kSignificance ? "1" : "0"});
}

/// One regression outcome per modality: either both fits or the reason none
/// could be made.
struct RegressionRow {
  std::string modality;
  std::optional<ModalityRegression> fit;
  std::string error;
};

/// Per-modality regressions that record degenerate modalities instead of
/// aborting the whole table.
inline std::vector<RegressionRow> regression_table(const std::vector<EvalRecord>& records) {
  std::vector<RegressionRow> out;
  for (const auto& [tag, recs] : group_by_modality(records)) {
    std::vector<EvalRecord> sub;
    for (const auto* r : recs) sub.push_back(*r);
    RegressionRow row{tag, std::nullopt, {}};
    try {
      row.fit = ModalityRegression{tag, regress_feature(sub, Feature::Sigma),
                                   regress_feature(sub, Feature::Entropy)};
    } catch (const Error& e) {
      row.error = e.what();
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Per-modality regression slopes and p-values.
inline void save_regression_csv(const std::vector<RegressionRow>& rows, const fs::path& path) {
  csv::Writer w(path, {"modality", "r_sigma", "p_sigma", "sig_sigma", "r_entropy", "p_entropy",
                       "sig_entropy", "n", "note"});
  for (const auto& r : rows) {
    if (!r.fit) {
      w.row({r.modality, "nan", "nan", "", "nan", "nan", "", "", r.error});
      continue;
    }
    const auto& f = *r.fit;
    w.row({r.modality, csv::num(f.sigma.coefficient), csv::num(f.sigma.p_value), stars(f.sigma.p_value),
           csv::num(f.entropy.coefficient), csv::num(f.entropy.p_value), stars(f.entropy.p_value),
           std::to_string(f.sigma.n), ""});
  }
}

struct AnalysisOutputs {
  Report report;
  std::vector<ModalityTTest> ttests;
  std::vector<RegressionRow> regressions;
  HypothesisSummary hypotheses;
};

/// Everything the analyze stage produces. Modalities with too few records
/// for a t-test are skipped; degenerate regressions are noted, not fatal.
inline AnalysisOutputs analyze(const std::vector<EvalRecord>& records,
                               std::span<const double> meta_perfs) {
  AnalysisOutputs out;
  out.report = modality_report(records, meta_perfs);
  for (const auto& [tag, recs] : group_by_modality(records)) {
    if (recs.size() < 2) continue;
    std::vector<double> d;
    for (const auto* r : recs) d.push_back(r->loss_edge - r->loss_raw);
    out.ttests.push_back({tag, paired_ttest(d)});
  }
  out.regressions = regression_table(records);
  std::vector<ModalityRegression> fits;
  for (const auto& r : out.regressions)
    if (r.fit) fits.push_back(*r.fit);
  out.hypotheses = summarize_hypotheses(fits);
  return out;
}

inline nlohmann::ordered_json to_json(const AnalysisOutputs& a) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["report"] = to_json(a.report);
  auto& tt = j["ttests"] = nlohmann::ordered_json::array();
  for (const auto& t : a.ttests) {
    auto e = to_json(t.result);
    e["modality"] = t.modality;
    tt.push_back(e);
  }
  auto& rg = j["regressions"] = nlohmann::ordered_json::array();
  for (const auto& r : a.regressions) {
    nlohmann::ordered_json e;
    e["modality"] = r.modality;
    if (r.fit) {
      e["sigma"] = to_json(r.fit->sigma);
      e["entropy"] = to_json(r.fit->entropy);
    } else {
      e["error"] = r.error;
    }
    rg.push_back(e);
  }
  auto& hy = j["hypotheses"];
  hy["h1_sigma_divergent"] = a.hypotheses.h1_divergent;
  hy["h2_entropy_divergent"] = a.hypotheses.h2_divergent;
  auto& hr = hy["modalities"] = nlohmann::ordered_json::array();
  for (const auto& r : a.hypotheses.rows)
    hr.push_back({{"modality", r.modality},
                  {"h1_sigma", std::string(to_string(r.h1))},
                  {"h2_entropy", std::string(to_string(r.h2))}});
  return j;
}

inline void save_json(const nlohmann::ordered_json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

/// Writes report.json, report.csv, ttests.csv and regression.csv into `dir`.
inline void save_analysis(const AnalysisOutputs& a, const fs::path& dir) {
  fs::create_directories(dir);
  save_json(to_json(a), dir / "report.json");
  save_report_csv(a.report, dir / "report.csv");
  save_ttests_csv(a.ttests, dir / "ttests.csv");
  save_regression_csv(a.regressions, dir / "regression.csv");
}

}  // namespace edgeroute

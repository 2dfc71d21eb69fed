#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edgeroute/analysis.hpp"
#include "edgeroute/edge.hpp"
#include "edgeroute/error.hpp"
#include "edgeroute/features.hpp"
#include "edgeroute/io.hpp"
#include "edgeroute/manifest.hpp"
#include "edgeroute/metrics.hpp"
#include "edgeroute/predictors.hpp"
#include "edgeroute/router.hpp"
#include "edgeroute/synth.hpp"

namespace edgeroute {

/// Failure inside a pipeline stage; `stage` names where it happened.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& what, bool internal = false)
      : Error(kind, what), stage_(std::move(stage)), internal_(internal) {}
  const std::string& stage() const noexcept { return stage_; }
  /// Not a data problem: something unexpected escaped a stage.
  bool internal() const noexcept { return internal_; }

 private:
  std::string stage_;
  bool internal_ = false;
};

struct PipelineConfig {
  fs::path base_dir;  // relative paths in the config resolve against this
  std::optional<fs::path> manifest;
  std::vector<SynthSpec> synth;
  std::vector<std::string> modalities;  // empty: default set (or synth tags)
  std::string raw_predictor = "otsu";
  std::string edge_predictor = "edge-otsu";
  EdgeKind edge_op = EdgeKind::Kirsch;
  std::optional<double> edge_scale;
  double tau = kDefaultTau;
  std::optional<double> model_train_fraction;  // split off before evaluation
  double router_fraction = 0.8;
  std::uint64_t split_seed = 0;
  bool write_enhanced = false;
};

namespace detail {
inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}
}  // namespace detail

/// INI config. Sections: [pipeline], [data], [predictors] and any number of
/// [synth:<name>] populations. See configs/ for annotated examples.
/// Like ptree::get with a default, but a present value that fails to
/// convert is an error instead of silently falling back.
template <class T>
T get_or(const boost::property_tree::ptree& t, const std::string& key, T fallback) {
  const auto raw = t.get_optional<std::string>(key);
  if (!raw) return fallback;
  const auto v = t.get_optional<T>(key);
  if (!v) fail(ErrorKind::Config, "bad value '" + *raw + "' for key '" + key + "'");
  return *v;
}

inline PipelineConfig parse_config(std::istream& in, const fs::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, e.what());
  }
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    if (auto p = tree.get_child_optional("pipeline")) {
      c.tau = get_or(*p, "tau", c.tau);
      c.edge_op = parse_edge_kind(p->get<std::string>("edge_op", "kirsch"));
      if (p->count("edge_scale")) c.edge_scale = get_or(*p, "edge_scale", 0.0);
      if (p->count("model_train_fraction"))
        c.model_train_fraction = get_or(*p, "model_train_fraction", 0.0);
      c.router_fraction = get_or(*p, "router_fraction", c.router_fraction);
      c.split_seed = get_or<std::uint64_t>(*p, "split_seed", c.split_seed);
      c.write_enhanced = get_or(*p, "write_enhanced", c.write_enhanced);
      if (auto m = p->get_optional<std::string>("modalities")) c.modalities = detail::split_list(*m);
    }
    if (auto d = tree.get_child_optional("data")) {
      if (auto m = d->get_optional<std::string>("manifest")) {
        fs::path p(*m);
        c.manifest = p.is_relative() ? base_dir / p : p;
      }
    }
    if (auto p = tree.get_child_optional("predictors")) {
      c.raw_predictor = get_or(*p, "raw", c.raw_predictor);
      c.edge_predictor = get_or(*p, "edge", c.edge_predictor);
    }
    for (const auto& [section, body] : tree) {
      if (section.rfind("synth:", 0) != 0) continue;
      SynthSpec s;
      s.name = section.substr(6);
      s.modality = body.get<std::string>("modality");
      s.n_images = get_or(body, "n", s.n_images);
      s.shape = parse_shape(body.get<std::string>("shape", "disks"));
      s.texture = parse_texture(body.get<std::string>("texture", "flat"));
      s.noise_sigma = get_or(body, "noise_sigma", s.noise_sigma);
      s.contrast = get_or(body, "contrast", s.contrast);
      s.background = get_or(body, "background", s.background);
      s.gradient = get_or(body, "gradient", s.gradient);
      s.width = get_or(body, "width", s.width);
      s.height = get_or(body, "height", s.height);
      s.seed = get_or<std::uint64_t>(body, "seed", s.seed);
      c.synth.push_back(std::move(s));
    }
  } catch (const pt::ptree_error& e) {
    fail(ErrorKind::Config, e.what());
  }
  if (c.manifest.has_value() == !c.synth.empty())
    fail(ErrorKind::Config, "config needs exactly one of [data] manifest or [synth:*] sections");
  if (!(c.router_fraction > 0.0 && c.router_fraction < 1.0))
    fail(ErrorKind::Config, "router_fraction must lie in (0, 1)");
  if (!(c.tau >= 0.0)) fail(ErrorKind::Config, "tau must be non-negative");
  if (c.modalities.empty() && !c.synth.empty())
    for (const auto& s : c.synth)
      if (std::find(c.modalities.begin(), c.modalities.end(), s.modality) == c.modalities.end())
        c.modalities.push_back(s.modality);
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  return parse_config(in, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

struct PipelineResult {
  RoutingRule rule;
  AnalysisOutputs heldout;
  AnalysisOutputs router_train;
  std::vector<EvalRecord> heldout_records;
  std::vector<double> heldout_meta_perfs;
};

/// Stage-ordered run of the full experiment. Artifacts land in `out_dir`;
/// a `.partial` marker naming the failed stage is left behind on error.
///
///   ingest       data/manifest.csv (synthesized or copied)
///   split        splits/{model_train,router_train,heldout}.csv
///   enhance      enhanced/<stem>.png             (write_enhanced only)
///   features     features.csv
///   records      records_router_train.csv, records_heldout.csv
///   route-train  rule.json
///   route-apply  meta/<stem>.png, routing.csv
///   analyze      analysis/ (held-out), analysis_router_train/
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir,
                                   std::ostream* log = nullptr) {
  std::string stage = "setup";
  const fs::path marker = out_dir / ".partial";
  auto say = [&](const std::string& msg) {
    if (log) *log << "[" << stage << "] " << msg << '\n';
  };
  auto mark = [&](const std::string& what) {
    std::ofstream(marker, std::ios::trunc) << what << '\n';
  };
  try {
    fs::create_directories(out_dir);
    mark("running");

    stage = "ingest";
    DatasetManifest all;
    if (cfg.manifest) {
      all = load_manifest(*cfg.manifest, cfg.modalities);
      fs::create_directories(out_dir / "data");
      save_manifest(all, out_dir / "data" / "manifest.csv");
    } else {
      all = generate(cfg.synth, out_dir / "data");
    }
    say(std::to_string(all.size()) + " images");

    stage = "split";
    fs::create_directories(out_dir / "splits");
    DatasetManifest eval = all;
    if (cfg.model_train_fraction) {
      auto [train, test] = stratified_split(all, *cfg.model_train_fraction, cfg.split_seed);
      save_manifest(train, out_dir / "splits" / "model_train.csv");
      eval = std::move(test);
    }
    auto [router_set, heldout_set] = stratified_split(eval, cfg.router_fraction, cfg.split_seed + 1);
    if (heldout_set.empty()) fail(ErrorKind::Split, "held-out split is empty");
    save_manifest(router_set, out_dir / "splits" / "router_train.csv");
    save_manifest(heldout_set, out_dir / "splits" / "heldout.csv");
    say(std::to_string(router_set.size()) + " router-train / " + std::to_string(heldout_set.size()) +
        " held-out");

    stage = "enhance";
    if (cfg.write_enhanced) {
      for (const auto& e : eval.entries)
        save_image(enhance(load_image(e.image), cfg.edge_op, cfg.edge_scale),
                   out_dir / "enhanced" / (e.id() + ".png"));
    }

    stage = "features";
    {
      csv::Writer w(out_dir / "features.csv", {"image", "modality", "sigma", "entropy"});
      for (const auto& e : eval.entries) {
        const auto f = extract_features(load_image(e.image));
        w.row({e.id(), e.modality, csv::num(f.sigma), csv::num(f.entropy)});
      }
    }

    stage = "records";
    const Predictor raw = Predictor::parse(cfg.raw_predictor, &eval, cfg.edge_op, cfg.edge_scale);
    const Predictor edge = Predictor::parse(cfg.edge_predictor, &eval, cfg.edge_op, cfg.edge_scale);
    const auto train_records = build_eval_records(router_set, raw, edge, cfg.tau);
    const auto heldout_records = build_eval_records(heldout_set, raw, edge, cfg.tau);
    save_records(train_records, out_dir / "records_router_train.csv");
    save_records(heldout_records, out_dir / "records_heldout.csv");

    stage = "route-train";
    const RoutingRule rule = train_router(train_records);
    save_rule(rule, out_dir / "rule.json");

    stage = "route-apply";
    std::vector<double> meta_perfs;
    {
      csv::Writer w(out_dir / "routing.csv", {"image", "modality", "sigma", "entropy", "choice",
                                              "dsc", "nsd", "perf"});
      fs::create_directories(out_dir / "meta");
      for (const auto& e : heldout_set.entries) {
        const Image img = load_image(e.image);
        const auto mp = meta_predict_detailed(rule, raw, edge, img, e.modality, e.id());
        save_mask(mp.mask, out_dir / "meta" / (e.id() + ".png"));
        const auto s = perf(mp.mask, load_mask(e.gt), cfg.tau);
        const auto f = extract_features(img);
        meta_perfs.push_back(s.perf);
        w.row({e.id(), e.modality, csv::num(f.sigma), csv::num(f.entropy),
               std::to_string(mp.choice), csv::num(s.dsc), csv::num(s.nsd), csv::num(s.perf)});
      }
    }

    stage = "analyze";
    PipelineResult res;
    res.rule = rule;
    res.heldout = analyze(heldout_records, meta_perfs);
    res.router_train = analyze(train_records, routed_perfs(rule, train_records));
    save_analysis(res.heldout, out_dir / "analysis");
    save_analysis(res.router_train, out_dir / "analysis_router_train");
    res.heldout_records = heldout_records;
    res.heldout_meta_perfs = std::move(meta_perfs);
    say("aggregate held-out perf raw " + csv::fixed(res.heldout.report.aggregated.perf_raw, 2) +
        " edge " + csv::fixed(res.heldout.report.aggregated.perf_edge, 2) + " meta " +
        csv::fixed(res.heldout.report.aggregated.perf_meta, 2));

    fs::remove(marker);
    return res;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    std::error_code ec;
    if (fs::is_directory(out_dir, ec)) mark(stage);
    throw StageError(stage, e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    std::error_code ec;
    if (fs::is_directory(out_dir, ec)) mark(stage);
    throw StageError(stage, ErrorKind::Io, e.what());
  } catch (const std::exception& e) {
    std::error_code ec;
    if (fs::is_directory(out_dir, ec)) mark(stage);
    throw StageError(stage, ErrorKind::Io, e.what(), true);
  }
}

}  // namespace edgeroute

// Command-line front end: one subcommand per pipeline stage plus `pipeline`
// for the whole run. Exit codes: 0 ok, 1 usage, 2 data, 3 internal.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeroute/edgeroute.hpp"

namespace fs = std::filesystem;
using namespace edgeroute;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int exit_code(ErrorKind k) { return k == ErrorKind::Usage ? kExitUsage : kExitData; }

DatasetManifest read_manifest(const std::string& path, const std::string& modalities) {
  std::vector<std::string> allowed;
  if (!modalities.empty()) allowed = detail::split_list(modalities);
  return load_manifest(path, allowed);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

struct Common {
  std::string modalities;
  std::string op = "kirsch";
  std::optional<double> scale;
};

void add_modalities(CLI::App* sub, Common& c) {
  sub->add_option("--modalities", c.modalities,
                  "Comma-separated modality tags accepted in manifests (default: the seven "
                  "standard medical modalities)");
}

void add_edge_options(CLI::App* sub, Common& c) {
  sub->add_option("--op", c.op, "Edge operator for edge-assisted predictors")
      ->check(CLI::IsMember({"kirsch", "sobel", "prewitt"}));
  sub->add_option("--scale", c.scale, "Edge response scale (default: operator-specific)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgeroute: edge-enhanced segmentation routing and evaluation"};
  app.require_subcommand(1);
  Common common;

  // enhance
  auto* enhance_cmd = app.add_subcommand("enhance", "Write edge-enhanced images");
  std::string enhance_in, enhance_out;
  enhance_cmd->add_option("--in", enhance_in, "Manifest CSV or a single image")->required();
  enhance_cmd->add_option("--out", enhance_out, "Output directory")->required();
  add_edge_options(enhance_cmd, common);
  add_modalities(enhance_cmd, common);

  // features
  auto* features_cmd = app.add_subcommand("features", "Meta-features per image");
  std::string features_in, features_out = "features.csv";
  features_cmd->add_option("--in", features_in, "Manifest CSV")->required();
  features_cmd->add_option("--out", features_out, "Output CSV");
  add_modalities(features_cmd, common);

  // score
  auto* score_cmd = app.add_subcommand("score", "Score predicted masks against ground truth");
  std::string score_pred, score_gt, score_out = "scores.csv";
  double tau = kDefaultTau;
  score_cmd->add_option("--pred", score_pred,
                        "Mask directory (<dir>/<stem>.png) or manifest column pred_raw|pred_edge")
      ->required();
  score_cmd->add_option("--gt", score_gt, "Manifest CSV with ground truth")->required();
  score_cmd->add_option("--tau", tau, "NSD tolerance in pixels")->check(CLI::NonNegativeNumber);
  score_cmd->add_option("--out", score_out, "Output CSV");
  add_modalities(score_cmd, common);

  // records
  auto* records_cmd = app.add_subcommand("records", "Per-image evaluation records for both pipelines");
  std::string records_in, records_raw = "otsu", records_edge = "edge-otsu", records_out = "records.csv";
  records_cmd->add_option("--in", records_in, "Manifest CSV")->required();
  records_cmd->add_option("--raw", records_raw, "Raw-pipeline predictor");
  records_cmd->add_option("--edge", records_edge, "Edge-pipeline predictor");
  records_cmd->add_option("--tau", tau, "NSD tolerance in pixels")->check(CLI::NonNegativeNumber);
  records_cmd->add_option("--out", records_out, "Output CSV");
  add_edge_options(records_cmd, common);
  add_modalities(records_cmd, common);

  // route-train
  auto* train_cmd = app.add_subcommand("route-train", "Fit the per-modality routing rule");
  std::string train_records, train_out = "rule.json";
  train_cmd->add_option("--records", train_records, "Records CSV")->required();
  train_cmd->add_option("--out", train_out, "Rule JSON");

  // route-apply
  auto* apply_cmd = app.add_subcommand("route-apply", "Route each image and write the chosen mask");
  std::string apply_rule, apply_in, apply_raw = "otsu", apply_edge = "edge-otsu", apply_out;
  apply_cmd->add_option("--rule", apply_rule, "Rule JSON")->required();
  apply_cmd->add_option("--in", apply_in, "Manifest CSV")->required();
  apply_cmd->add_option("--raw", apply_raw, "Raw-pipeline predictor");
  apply_cmd->add_option("--edge", apply_edge, "Edge-pipeline predictor");
  apply_cmd->add_option("--out", apply_out, "Output directory")->required();
  add_edge_options(apply_cmd, common);
  add_modalities(apply_cmd, common);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Statistical report from records");
  std::string analyze_records, analyze_rule, analyze_meta, analyze_out = ".";
  analyze_cmd->add_option("--records", analyze_records, "Records CSV")->required();
  auto* rule_opt = analyze_cmd->add_option("--rule", analyze_rule, "Rule JSON; meta scores follow the routing");
  auto* meta_opt = analyze_cmd->add_option("--meta-scores", analyze_meta,
                                           "scores.csv of the routed masks (column perf)");
  rule_opt->excludes(meta_opt);
  analyze_cmd->add_option("--out", analyze_out, "Output directory");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic population");
  SynthSpec spec;
  std::string synth_out, shape = "disks", texture = "flat";
  bool append = false;
  int size = 128;
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--modality", spec.modality, "Modality tag")->required();
  synth_cmd->add_option("--name", spec.name, "File-name prefix (default: modality)");
  synth_cmd->add_option("--n", spec.n_images, "Number of images")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--shape", shape)->check(CLI::IsMember({"disks", "rectangles", "blobs"}));
  synth_cmd->add_option("--texture", texture)->check(CLI::IsMember({"flat", "gaussian-noise", "gradient"}));
  synth_cmd->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma");
  synth_cmd->add_option("--contrast", spec.contrast, "Foreground minus background intensity");
  synth_cmd->add_option("--background", spec.background, "Background intensity");
  synth_cmd->add_option("--gradient", spec.gradient, "Ramp amplitude for the gradient texture");
  synth_cmd->add_option("--size", size, "Image side length")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", spec.seed, "Random seed");
  synth_cmd->add_flag("--append", append, "Append to an existing manifest.csv in --out");

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run the full experiment from a config");
  std::string config_path, pipeline_out;
  pipeline_cmd->add_option("--config", config_path, "Pipeline INI config")->required();
  pipeline_cmd->add_option("--out", pipeline_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const EdgeKind op = parse_edge_kind(common.op);

    if (*enhance_cmd) {
      ensure_dir(enhance_out);
      std::vector<fs::path> inputs;
      if (fs::path(enhance_in).extension() == ".csv") {
        for (const auto& e : read_manifest(enhance_in, common.modalities).entries) inputs.push_back(e.image);
      } else {
        inputs.push_back(enhance_in);
      }
      for (const auto& p : inputs)
        save_image(enhance(load_image(p), op, common.scale), fs::path(enhance_out) / p.filename());
      std::cerr << "enhanced " << inputs.size() << " image(s)\n";
    } else if (*features_cmd) {
      const auto m = read_manifest(features_in, common.modalities);
      csv::Writer w(features_out, {"image", "modality", "sigma", "entropy"});
      for (const auto& e : m.entries) {
        const auto f = extract_features(load_image(e.image));
        w.row({e.id(), e.modality, csv::num(f.sigma), csv::num(f.entropy)});
      }
    } else if (*score_cmd) {
      const auto m = read_manifest(score_gt, common.modalities);
      const Predictor p = (score_pred == "pred_raw" || score_pred == "pred_edge")
                              ? Predictor::from_manifest_column(m, score_pred)
                              : Predictor::precomputed(score_pred);
      csv::Writer w(score_out, {"image", "modality", "dsc", "nsd", "perf", "bce", "dice_loss",
                                "iou_loss", "total_loss"});
      for (const auto& e : m.entries) {
        const Mask gt = load_mask(e.gt);
        const Mask pred = p.predict(load_image(e.image), e.id());
        const auto s = perf(pred, gt, tau);
        const auto l = loss(pred, gt);
        w.row({e.id(), e.modality, csv::num(s.dsc), csv::num(s.nsd), csv::num(s.perf),
               csv::num(l.bce), csv::num(l.dice), csv::num(l.iou), csv::num(l.total)});
      }
    } else if (*records_cmd) {
      const auto m = read_manifest(records_in, common.modalities);
      const auto raw = Predictor::parse(records_raw, &m, op, common.scale);
      const auto edge = Predictor::parse(records_edge, &m, op, common.scale);
      save_records(build_eval_records(m, raw, edge, tau), records_out);
    } else if (*train_cmd) {
      save_rule(train_router(load_records(train_records)), train_out);
    } else if (*apply_cmd) {
      const auto rule = load_rule(apply_rule);
      const auto m = read_manifest(apply_in, common.modalities);
      const auto raw = Predictor::parse(apply_raw, &m, op, common.scale);
      const auto edge = Predictor::parse(apply_edge, &m, op, common.scale);
      ensure_dir(apply_out);
      csv::Writer w(fs::path(apply_out) / "routing.csv", {"image", "modality", "sigma", "entropy", "choice"});
      for (const auto& e : m.entries) {
        const Image img = load_image(e.image);
        const auto mp = meta_predict_detailed(rule, raw, edge, img, e.modality, e.id());
        save_mask(mp.mask, fs::path(apply_out) / (e.id() + ".png"));
        const auto f = extract_features(img);
        w.row({e.id(), e.modality, csv::num(f.sigma), csv::num(f.entropy), std::to_string(mp.choice)});
      }
    } else if (*analyze_cmd) {
      const auto records = load_records(analyze_records);
      std::vector<double> meta;
      if (!analyze_rule.empty()) {
        meta = routed_perfs(load_rule(analyze_rule), records);
      } else if (!analyze_meta.empty()) {
        const auto t = csv::read(analyze_meta);
        const int ci = t.require_column("image"), cp = t.require_column("perf");
        std::map<std::string, double> by_id;
        for (const auto& row : t.rows) by_id[row[ci]] = csv::to_double(row[cp], "perf");
        for (const auto& r : records) {
          const auto it = by_id.find(r.image_id);
          if (it == by_id.end()) fail(ErrorKind::Lookup, "no meta score for '" + r.image_id + "'");
          meta.push_back(it->second);
        }
      } else {
        fail(ErrorKind::Usage, "analyze needs --rule or --meta-scores");
      }
      save_analysis(analyze(records, meta), analyze_out);
    } else if (*synth_cmd) {
      spec.shape = parse_shape(shape);
      spec.texture = parse_texture(texture);
      spec.width = spec.height = size;
      DatasetManifest m;
      const fs::path manifest = fs::path(synth_out) / "manifest.csv";
      if (append && fs::exists(manifest)) m = load_manifest(manifest, {"*"});
      auto part = generate_entries(spec, synth_out);
      m.entries.insert(m.entries.end(), part.entries.begin(), part.entries.end());
      save_manifest(m, manifest);
    } else if (*pipeline_cmd) {
      const auto cfg = load_config(config_path);
      run_pipeline(cfg, pipeline_out, &std::cerr);
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error [stage=" << e.stage() << "] " << to_string(e.kind()) << ": " << e.what() << '\n';
    return e.internal() ? kExitInternal : exit_code(e.kind());
  } catch (const Error& e) {
    std::cerr << "error " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

#include "adalam/cli.hpp"

#include "adalam/adalam.hpp"
#include "adalam/eval.hpp"
#include "adalam/io.hpp"
#include "adalam/matching.hpp"
#include "adalam/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace adalam {
namespace {

// Bound to every AdalamParams field; defaults come from the struct itself.
struct FilterOptions {
  AdalamParams params;
  double fixed_threshold = 0.0;
  bool no_side_info = false;
  bool no_refit = false;
};

void add_adalam_options(CLI::App& app, FilterOptions& o) {
  app.add_option("--area-ratio", o.params.area_ratio,
                 "Image area over seed-suppression disk area")
      ->capture_default_str();
  app.add_option("--lambda", o.params.lambda, "Neighbourhood radius / seed radius")
      ->capture_default_str();
  app.add_option("--iterations", o.params.iterations, "RANSAC iterations per seed")
      ->capture_default_str();
  app.add_option("--t-alpha", o.params.t_alpha, "Orientation agreement threshold (rad)")
      ->capture_default_str();
  app.add_option("--t-sigma", o.params.t_sigma, "Log-scale agreement threshold")
      ->capture_default_str();
  app.add_option("--t-c", o.params.t_c, "Inlier confidence threshold")
      ->capture_default_str();
  app.add_option("--t-n", o.params.t_n, "Minimum inliers for an accepted seed")
      ->capture_default_str();
  app.add_option("--eps-residual", o.params.eps_residual,
                 "Residual clamp as a fraction of R2")
      ->capture_default_str();
  app.add_option("--fixed-threshold", o.fixed_threshold,
                 "Fixed inlier radius in pixels (LAM); disables adaptive confidence");
  app.add_flag("--no-side-info", o.no_side_info, "Skip orientation/scale filtering");
  app.add_flag("--no-refit", o.no_refit, "Skip least-squares refitting");
}

AdalamParams finalize(const CLI::App& app, FilterOptions o) {
  if (o.no_side_info) o.params.use_side_info = false;
  if (o.no_refit) o.params.use_refit = false;
  if (app.count("--fixed-threshold") > 0) o.params.fixed_threshold = o.fixed_threshold;
  return o.params;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("list", "invalid number '" + item + "'");
    }
    if (used != item.size()) throw CLI::ValidationError("list", "invalid number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_threshold(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Writes every file or none: earlier outputs are removed if a later one fails.
void write_outputs(const std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<std::string> done;
  try {
    for (const auto& [path, text] : files) {
      write_text_file_atomic(path, text);
      done.push_back(path);
    }
  } catch (...) {
    for (const auto& path : done) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
    throw;
  }
}

struct SynthOptions {
  SynthConfig config;
  std::string kp1, kp2, matches;
  std::string motion = "random";
  double rotation_deg = 0.0;
  bool no_frame = false;
};

int run_synth(const SynthOptions& o) {
  SynthConfig cfg = o.config;
  cfg.frame_consistent = !o.no_frame;
  if (o.motion == "random") {
    cfg.motion = PatchMotion::kRandom;
  } else if (o.motion == "identity") {
    cfg.motion = PatchMotion::kIdentity;
  } else {
    cfg.motion = PatchMotion::kFixedRotation;
    cfg.rotation_rad = deg_to_rad(o.rotation_deg);
  }
  const SynthScene scene = generate_scene(cfg);
  write_outputs({{o.kp1, format_keypoints(scene.size1, scene.k1)},
                 {o.kp2, format_keypoints(scene.size2, scene.k2)},
                 {o.matches, format_matches(scene.matches, &scene.gt_inlier)}});
  return kExitOk;
}

struct MatchOptions {
  std::string kp1, kp2, out;
  int threads = 0;
};

int run_match(const MatchOptions& o) {
  const KeypointFile f1 = read_keypoints(o.kp1);
  const KeypointFile f2 = read_keypoints(o.kp2);
  write_matches(o.out, nn_match(f1.keypoints, f2.keypoints, o.threads));
  return kExitOk;
}

struct FilterRun {
  std::string kp1, kp2, matches, out, report;
  std::string method = "adalam";
  double ratio_threshold = 0.8;
  int threads = 0;
};

int run_filter(const FilterRun& o, const AdalamParams& params) {
  const KeypointFile f1 = read_keypoints(o.kp1);
  const KeypointFile f2 = read_keypoints(o.kp2);
  const MatchFile mf = read_matches(o.matches);

  std::vector<std::size_t> keep;
  std::vector<SeedReport> reports;
  if (o.method == "adalam") {
    FilterResult r = adalam_filter(f1.keypoints, f2.keypoints, f1.size, f2.size,
                                   mf.matches, params, o.threads);
    keep = std::move(r.selected);
    reports = std::move(r.seed_reports);
  } else {
    std::vector<PutativeMatch> kept =
        o.method == "ratio"
            ? ratio_test_filter(mf.matches, o.ratio_threshold)
            : mutual_nn_filter(f1.keypoints, f2.keypoints, mf.matches, o.threads);
    // Both baselines preserve order, so kept rows map back by a forward scan.
    std::size_t j = 0;
    for (std::size_t i = 0; i < mf.matches.size() && j < kept.size(); ++i) {
      if (mf.matches[i] == kept[j]) {
        keep.push_back(i);
        ++j;
      }
    }
  }

  std::vector<PutativeMatch> selected;
  std::vector<bool> labels;
  for (std::size_t i : keep) {
    selected.push_back(mf.matches[i]);
    if (mf.gt_inlier) labels.push_back((*mf.gt_inlier)[i]);
  }
  std::vector<std::pair<std::string, std::string>> files{
      {o.out, format_matches(selected, mf.gt_inlier ? &labels : nullptr)}};
  if (!o.report.empty()) files.emplace_back(o.report, format_seed_reports(reports));
  write_outputs(files);
  return kExitOk;
}

struct EvalOptions {
  std::string gt, selected, errors;
  std::string auc, hist_auc, map;
  double bin_width = 5.0;
};

int run_eval(const EvalOptions& o, std::ostream& out) {
  if (!o.errors.empty()) {
    const std::vector<double> errors = read_errors(o.errors);
    std::string text;
    for (double t : parse_list(o.auc)) {
      text += "auc@" + fmt_threshold(t) + "=" + fmt(exact_auc(errors, t)) + "\n";
    }
    for (double t : parse_list(o.hist_auc)) {
      text += "hist_auc@" + fmt_threshold(t) + "=" + fmt(hist_auc(errors, t, o.bin_width)) + "\n";
    }
    for (double t : parse_list(o.map)) {
      text += "map@" + fmt_threshold(t) + "=" + fmt(map_at(errors, t)) + "\n";
    }
    out << text;
    return kExitOk;
  }
  const MatchFile gt = read_matches(o.gt);
  if (!gt.gt_inlier) throw InvalidArgument(o.gt + ": file carries no gt column");
  const MatchFile sel = read_matches(o.selected);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t i = 0; i < gt.matches.size(); ++i) {
    index.emplace(std::pair{gt.matches[i].idx1, gt.matches[i].idx2}, i);
  }
  std::vector<std::size_t> selected;
  for (const auto& m : sel.matches) {
    const auto it = index.find({m.idx1, m.idx2});
    if (it == index.end()) {
      throw InvalidArgument("selected match " + std::to_string(m.idx1) + " -> " +
                            std::to_string(m.idx2) + " is not in " + o.gt);
    }
    selected.push_back(it->second);
  }
  out << format_report(match_prf(selected, *gt.gt_inlier));
  return kExitOk;
}

struct BenchOptions {
  int scenes = 5;
  std::uint64_t seed = 1;
  std::string outliers = "100,233,500,1000";
  std::string lam_thresholds = "2,4,8";
  int patches = 5;
  int per_patch = 20;
  double noise = 1.0;
  double rotation_deg = 30.0;
  double ratio_threshold = 0.8;
  int threads = 0;
};

int run_bench(const BenchOptions& o, std::ostream& out) {
  struct Variant {
    std::string name;
    std::optional<AdalamParams> params;  // empty: ratio test
  };
  std::vector<Variant> variants;
  variants.push_back({"adalam", AdalamParams{}});
  AdalamParams no_side;
  no_side.use_side_info = false;
  variants.push_back({"no-side", no_side});
  AdalamParams no_refit;
  no_refit.use_refit = false;
  variants.push_back({"no-refit", no_refit});
  for (double t : parse_list(o.lam_thresholds)) {
    AdalamParams lam;
    lam.use_refit = false;
    lam.fixed_threshold = t;
    variants.push_back({"lam@" + fmt_threshold(t) + "px", lam});
  }
  variants.push_back({"ratio-test", std::nullopt});

  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-14s %9s %9s %9s %10s\n", "outliers", "method",
                "precision", "recall", "f1", "time_ms");
  out << line;
  for (double outliers_real : parse_list(o.outliers)) {
    const int outliers = static_cast<int>(outliers_real);
    std::vector<SynthScene> scenes;
    for (int s = 0; s < o.scenes; ++s) {
      SynthConfig cfg;
      cfg.n_patches = o.patches;
      cfg.keypoints_per_patch = o.per_patch;
      cfg.n_outliers = outliers;
      cfg.noise_sigma = o.noise;
      cfg.motion = PatchMotion::kFixedRotation;
      cfg.rotation_rad = deg_to_rad(o.rotation_deg);
      cfg.rng_seed = o.seed + static_cast<std::uint64_t>(s);
      scenes.push_back(generate_scene(cfg));
    }
    for (const auto& v : variants) {
      double p = 0.0, r = 0.0, f = 0.0, ms = 0.0;
      for (const auto& scene : scenes) {
        std::vector<std::size_t> selected;
        const auto t0 = std::chrono::steady_clock::now();
        if (v.params) {
          selected = adalam_filter(scene.k1, scene.k2, scene.size1, scene.size2,
                                   scene.matches, *v.params, o.threads)
                         .selected;
        } else {
          for (std::size_t i = 0; i < scene.matches.size(); ++i) {
            if (scene.matches[i].ratio <= o.ratio_threshold) selected.push_back(i);
          }
        }
        const auto t1 = std::chrono::steady_clock::now();
        ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        const EvalReport rep = match_prf(selected, scene.gt_inlier);
        p += rep.precision;
        r += rep.recall;
        f += rep.f1;
      }
      const double n = std::max(1, o.scenes);
      std::snprintf(line, sizeof(line), "%-10d %-14s %9.4f %9.4f %9.4f %10.3f\n", outliers,
                    v.name.c_str(), p / n, r / n, f / n, ms / n);
      out << line;
    }
  }
  return kExitOk;
}

}  // namespace

AdalamParams adalam_params_from_flags(const std::vector<std::string>& flags) {
  CLI::App app("adalam params");
  FilterOptions o;
  add_adalam_options(app, o);
  std::vector<std::string> reversed(flags.rbegin(), flags.rend());
  app.parse(reversed);
  return finalize(app, o);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Adaptive locally-affine match filtering", "adalam");
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-view scene");
  synth_cmd->add_option("--kp1", synth.kp1, "Output keypoints of image 1")->required();
  synth_cmd->add_option("--kp2", synth.kp2, "Output keypoints of image 2")->required();
  synth_cmd->add_option("--matches", synth.matches, "Output matches with gt column")
      ->required();
  synth_cmd->add_option("--width1", synth.config.size1.width)->capture_default_str();
  synth_cmd->add_option("--height1", synth.config.size1.height)->capture_default_str();
  synth_cmd->add_option("--width2", synth.config.size2.width)->capture_default_str();
  synth_cmd->add_option("--height2", synth.config.size2.height)->capture_default_str();
  synth_cmd->add_option("--patches", synth.config.n_patches)->capture_default_str();
  synth_cmd->add_option("--per-patch", synth.config.keypoints_per_patch)
      ->capture_default_str();
  synth_cmd->add_option("--outliers", synth.config.n_outliers)->capture_default_str();
  synth_cmd->add_option("--noise", synth.config.noise_sigma, "Pixel noise sigma")
      ->capture_default_str();
  synth_cmd->add_option("--dim", synth.config.descriptor_dim)->capture_default_str();
  synth_cmd->add_option("--seed", synth.config.rng_seed)->capture_default_str();
  synth_cmd->add_option("--motion", synth.motion, "random | identity | rotation")
      ->check(CLI::IsMember({"random", "identity", "rotation"}))
      ->capture_default_str();
  synth_cmd->add_option("--rotation-deg", synth.rotation_deg,
                        "Patch rotation for --motion rotation")
      ->capture_default_str();
  synth_cmd->add_flag("--no-frame-consistent", synth.no_frame,
                      "Draw keypoint orientation and scale at random");

  MatchOptions match;
  auto* match_cmd = app.add_subcommand("match", "Nearest-neighbour descriptor matching");
  match_cmd->add_option("--kp1", match.kp1)->required();
  match_cmd->add_option("--kp2", match.kp2)->required();
  match_cmd->add_option("--out", match.out)->required();
  match_cmd->add_option("--threads", match.threads, "0 = all cores")->capture_default_str();

  FilterRun filter;
  FilterOptions filter_opts;
  auto* filter_cmd = app.add_subcommand("filter", "Filter putative matches");
  filter_cmd->add_option("--kp1", filter.kp1)->required();
  filter_cmd->add_option("--kp2", filter.kp2)->required();
  filter_cmd->add_option("--matches", filter.matches)->required();
  filter_cmd->add_option("--out", filter.out)->required();
  filter_cmd->add_option("--report", filter.report, "Per-seed diagnostics file");
  filter_cmd->add_option("--method", filter.method, "adalam | ratio | mnn")
      ->check(CLI::IsMember({"adalam", "ratio", "mnn"}))
      ->capture_default_str();
  filter_cmd->add_option("--ratio-threshold", filter.ratio_threshold)->capture_default_str();
  filter_cmd->add_option("--threads", filter.threads, "0 = all cores")->capture_default_str();
  add_adalam_options(*filter_cmd, filter_opts);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Match PRF or pose-error summaries");
  auto* gt_opt = eval_cmd->add_option("--gt", eval.gt, "Match file with gt column");
  auto* sel_opt = eval_cmd->add_option("--selected", eval.selected, "Filtered match file");
  auto* err_opt = eval_cmd->add_option("--errors", eval.errors, "Pose error list (degrees)");
  eval_cmd->add_option("--auc", eval.auc, "Exact AUC thresholds, comma separated");
  eval_cmd->add_option("--hist-auc", eval.hist_auc, "Histogram AUC thresholds");
  eval_cmd->add_option("--map", eval.map, "mAP thresholds");
  eval_cmd->add_option("--bin-width", eval.bin_width)->capture_default_str();
  gt_opt->needs(sel_opt);
  sel_opt->needs(gt_opt);
  err_opt->excludes(gt_opt);

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "F1 and runtime sweep over synthetic scenes");
  bench_cmd->add_option("--scenes", bench.scenes)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--outliers", bench.outliers, "Outlier counts to sweep")
      ->capture_default_str();
  bench_cmd->add_option("--lam-thresholds", bench.lam_thresholds)->capture_default_str();
  bench_cmd->add_option("--patches", bench.patches)->capture_default_str();
  bench_cmd->add_option("--per-patch", bench.per_patch)->capture_default_str();
  bench_cmd->add_option("--noise", bench.noise)->capture_default_str();
  bench_cmd->add_option("--rotation-deg", bench.rotation_deg)->capture_default_str();
  bench_cmd->add_option("--ratio-threshold", bench.ratio_threshold)->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (eval_cmd->parsed() && eval.errors.empty() && eval.gt.empty()) {
      throw CLI::ValidationError("eval", "need --errors or --gt with --selected");
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "adalam: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (match_cmd->parsed()) return run_match(match);
    if (filter_cmd->parsed()) return run_filter(filter, finalize(*filter_cmd, filter_opts));
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (bench_cmd->parsed()) return run_bench(bench, out);
  } catch (const CLI::ValidationError& e) {
    err << "adalam: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "adalam: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace adalam

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "adalam/adalam.hpp"
#include "adalam/affine.hpp"
#include "adalam/eval.hpp"
#include "adalam/io.hpp"
#include "adalam/matching.hpp"
#include "adalam/synth.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

namespace {

using namespace adalam;
using Clock = std::chrono::steady_clock;
using V2 = Eigen::Vector2d;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& run) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name,
              o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

SynthConfig easy_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_patches = 5;
  cfg.keypoints_per_patch = 20;
  cfg.n_outliers = 233;
  cfg.noise_sigma = 0.0;
  cfg.rng_seed = seed;
  return cfg;
}

// 1 -------------------------------------------------------------------------
// Direct evaluation: sort, then P / (n * r^2 / R2^2) with the residual clamp.
Outcome confidence_oracle() {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> size(2, 500);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int t = 0; t < 1000; ++t) {
    const int n = size(gen);
    const double r2 = 10.0 + 200.0 * u(gen);
    const double eps = 1e-6;
    std::vector<double> res(n);
    for (double& r : res) r = r2 * std::pow(u(gen), 2.0) * 2.0;
    if (t % 10 == 0) res[0] = 0.0;  // exercise the clamp

    std::vector<double> sorted = res;
    std::sort(sorted.begin(), sorted.end());
    const auto got = confidences(res, r2, eps);
    if (got.size() != res.size()) return {false, "size mismatch"};
    for (int k = 0; k < n; ++k) {
      if (res[got[k].member] != sorted[k]) return {false, "rank order mismatch"};
      const double r = std::max(sorted[k], eps * r2);
      const double expect = (k + 1.0) / (n * (r * r) / (r2 * r2));
      worst = std::max(worst, std::abs(got[k].confidence - expect) / expect);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, fmt("max rel err %.3g, %.2f s", worst, secs)};
}

// 2 -------------------------------------------------------------------------
Outcome affine_round_trip() {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> e(-2.0, 2.0), p(-50.0, 50.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  double err_min = 0.0, err_lsq = 0.0, err_noisy = 0.0;
  int degenerate = 0;
  const auto t0 = Clock::now();
  for (int t = 0; t < 10000; ++t) {
    Eigen::Matrix2d a;
    do {
      const double a11 = e(gen), a12 = e(gen), a21 = e(gen), a22 = e(gen);
      a << a11, a12, a21, a22;
    } while (std::abs(a.determinant()) < 0.05);
    V2 u1, u2;
    do {
      const double x1 = p(gen), y1 = p(gen), x2 = p(gen), y2 = p(gen);
      u1 = V2(x1, y1);
      u2 = V2(x2, y2);
    } while (std::abs(u1.x() * u2.y() - u1.y() * u2.x()) < 1.0);
    const auto m = fit_affine_minimal<double>(u1, a * u1, u2, a * u2);
    if (!m) {
      ++degenerate;
      continue;
    }
    err_min = std::max(err_min, (m->linear - a).cwiseAbs().maxCoeff());

    std::vector<CenteredPair<double>> exact, noisy;
    Eigen::MatrixXd us(100, 2), vs(100, 2);
    for (int k = 0; k < 100; ++k) {
      const double x = p(gen), y = p(gen);
      const V2 u(x, y);
      exact.push_back({u, a * u});
      const double nx = noise(gen), ny = noise(gen);
      const V2 v = a * u + V2(nx, ny);
      noisy.push_back({u, v});
      us.row(k) = u.transpose();
      vs.row(k) = v.transpose();
    }
    const auto l = fit_affine_lsq<double>(exact);
    const auto ln = fit_affine_lsq<double>(noisy);
    if (!l || !ln) {
      ++degenerate;
      continue;
    }
    err_lsq = std::max(err_lsq, (l->linear - a).cwiseAbs().maxCoeff());
    const Eigen::Matrix2d pinv =
        (us.completeOrthogonalDecomposition().pseudoInverse() * vs).transpose();
    err_noisy = std::max(err_noisy, (ln->linear - pinv).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  const bool ok = degenerate == 0 && err_min <= 1e-9 && err_lsq <= 1e-9 && err_noisy <= 1e-7 &&
                  secs < 10.0;
  return {ok, fmt("minimal %.2g, lsq %.2g, noisy-vs-pinv %.2g, ", err_min, err_lsq, err_noisy) +
                  std::to_string(degenerate) + " degenerate"};
}

// 3 -------------------------------------------------------------------------
std::vector<std::size_t> brute_seeds(const std::vector<PutativeMatch>& m,
                                     const KeypointSet& k1, double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    bool seed = true;
    for (std::size_t j = 0; j < m.size() && seed; ++j) {
      if (j == i) continue;
      if ((k1[m[j].idx1].position - k1[m[i].idx1].position).norm() > r) continue;
      const double ci = 1.0 - m[i].ratio, cj = 1.0 - m[j].ratio;
      if (cj > ci || (cj == ci && j < i)) seed = false;
    }
    if (seed) out.push_back(i);
  }
  return out;
}

Outcome nms_oracle() {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> x(0.0, 640.0), y(0.0, 480.0), u(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 9);
  const double radius = compute_radius(ImageSize(640, 480), 100.0);
  int mismatches = 0;
  for (int scene = 0; scene < 200; ++scene) {
    std::vector<Keypoint> kps;
    std::vector<PutativeMatch> m;
    for (std::size_t i = 0; i < 500; ++i) {
      const double px = x(gen), py = y(gen);
      kps.emplace_back(px, py, 1.0, 0.0, Eigen::Vector2d(1.0, 0.0));
      const double ratio = scene % 2 ? coarse(gen) / 10.0 : u(gen);
      m.emplace_back(i, i, 0.0, ratio);
    }
    const KeypointSet k1(std::move(kps));
    if (select_seeds(m, k1, radius) != brute_seeds(m, k1, radius)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/200 scenes differ"};
}

// 4 -------------------------------------------------------------------------
Outcome easy_suite() {
  double p = 0.0, r = 0.0;
  const auto t0 = Clock::now();
  for (int s = 0; s < 20; ++s) {
    const SynthScene sc = generate_scene(easy_config(static_cast<std::uint64_t>(s)));
    const FilterResult fr =
        adalam_filter(sc.k1, sc.k2, sc.size1, sc.size2, sc.matches, AdalamParams{});
    const EvalReport e = match_prf(fr.selected, sc.gt_inlier);
    p += e.precision;
    r += e.recall;
  }
  p /= 20.0;
  r /= 20.0;
  const double secs = seconds_since(t0);
  return {p >= 0.98 && r >= 0.90 && secs < 30.0,
          fmt("mean precision %.4f, mean recall %.4f, %.2f s", p, r, secs)};
}

// 5 -------------------------------------------------------------------------
Outcome null_suite() {
  int with_accept = 0;
  std::size_t spurious = 0;
  for (int s = 0; s < 50; ++s) {
    SynthConfig cfg;
    cfg.n_patches = 0;
    cfg.n_outliers = 1000;
    cfg.rng_seed = 5000 + static_cast<std::uint64_t>(s);
    const SynthScene sc = generate_scene(cfg);
    const FilterResult fr =
        adalam_filter(sc.k1, sc.k2, sc.size1, sc.size2, sc.matches, AdalamParams{});
    const bool any = std::any_of(fr.seed_reports.begin(), fr.seed_reports.end(),
                                 [](const SeedReport& r) { return r.accepted; });
    with_accept += any;
    spurious += fr.selected.size();
  }
  return {with_accept <= 1, std::to_string(with_accept) + "/50 scenes with an accepted seed, " +
                                std::to_string(spurious) + " matches kept in total"};
}

// 6 -------------------------------------------------------------------------
Outcome ablation_direction() {
  std::vector<SynthScene> scenes;
  for (int s = 0; s < 20; ++s) {
    SynthConfig cfg = easy_config(600 + static_cast<std::uint64_t>(s));
    cfg.motion = PatchMotion::kFixedRotation;
    cfg.rotation_rad = deg_to_rad(30.0);
    scenes.push_back(generate_scene(cfg));
  }
  AdalamParams no_side;
  no_side.use_side_info = false;
  auto run = [&](const AdalamParams& params, double& f1) {
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 5; ++rep) {
      double sum = 0.0;
      const auto t0 = Clock::now();
      std::vector<FilterResult> results;
      for (const auto& sc : scenes) {
        results.push_back(
            adalam_filter(sc.k1, sc.k2, sc.size1, sc.size2, sc.matches, params, 1));
      }
      best = std::min(best, seconds_since(t0));
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        sum += match_prf(results[i].selected, scenes[i].gt_inlier).f1;
      }
      f1 = sum / static_cast<double>(scenes.size());
    }
    return best;
  };
  double f1_full = 0.0, f1_ns = 0.0;
  const double t_full = run(AdalamParams{}, f1_full);
  const double t_ns = run(no_side, f1_ns);
  return {f1_full >= f1_ns && t_full <= t_ns,
          fmt("F1 %.4f vs no-side %.4f; time %.1f ms vs %.1f ms", f1_full, f1_ns,
              1e3 * t_full, 1e3 * t_ns)};
}

// 7 -------------------------------------------------------------------------
KeypointSet transform(const KeypointSet& k, double pos_scale, double sigma_scale,
                      double alpha_offset) {
  std::vector<Keypoint> out;
  for (const auto& p : k) {
    out.emplace_back(p.x() * pos_scale, p.y() * pos_scale, p.sigma * sigma_scale,
                     wrap_angle(p.alpha + alpha_offset), p.descriptor);
  }
  return KeypointSet(std::move(out));
}

Outcome invariance_suite() {
  int checks = 0, failed = 0;
  for (int s = 0; s < 20; ++s) {
    SynthConfig cfg = easy_config(700 + static_cast<std::uint64_t>(s));
    cfg.noise_sigma = 1.0;
    const SynthScene sc = generate_scene(cfg);
    const auto base =
        adalam_filter(sc.k1, sc.k2, sc.size1, sc.size2, sc.matches, AdalamParams{}).selected;
    auto check = [&](const KeypointSet& k1, const KeypointSet& k2, ImageSize s1, ImageSize s2) {
      ++checks;
      const auto got = adalam_filter(k1, k2, s1, s2, sc.matches, AdalamParams{}).selected;
      if (got != base) ++failed;
    };
    for (double f : {0.5, 2.0, 3.7}) {
      const ImageSize s1(static_cast<int>(std::lround(sc.size1.width * f)),
                         static_cast<int>(std::lround(sc.size1.height * f)));
      const ImageSize s2(static_cast<int>(std::lround(sc.size2.width * f)),
                         static_cast<int>(std::lround(sc.size2.height * f)));
      check(transform(sc.k1, f, f, 0.0), transform(sc.k2, f, f, 0.0), s1, s2);
    }
    for (double off : {0.7, -2.0, kPi / 2.0}) {
      check(sc.k1, transform(sc.k2, 1.0, 1.0, off), sc.size1, sc.size2);
    }
    for (double mul : {0.5, 3.0, 7.3}) {
      check(sc.k1, transform(sc.k2, 1.0, mul, 0.0), sc.size1, sc.size2);
    }
  }
  return {failed == 0, std::to_string(failed) + "/" + std::to_string(checks) +
                           " transformed scenes changed the selected set"};
}

// 8 -------------------------------------------------------------------------
Outcome determinism() {
  SynthConfig cfg = easy_config(800);
  cfg.n_patches = 10;
  cfg.n_outliers = 1500;
  cfg.noise_sigma = 1.0;
  const SynthScene sc = generate_scene(cfg);
  std::string ref;
  int differing = 0, runs = 0;
  for (int threads : {1, 2, 8}) {
    for (int rep = 0; rep < 5; ++rep) {
      const FilterResult r =
          adalam_filter(sc.k1, sc.k2, sc.size1, sc.size2, sc.matches, AdalamParams{}, threads);
      std::vector<PutativeMatch> sel;
      for (std::size_t i : r.selected) sel.push_back(sc.matches[i]);
      const std::string bytes = format_matches(sel) + format_seed_reports(r.seed_reports);
      if (ref.empty()) ref = bytes;
      differing += bytes != ref;
      ++runs;
    }
  }
  return {differing == 0, std::to_string(differing) + "/" + std::to_string(runs) +
                              " runs differ from the first"};
}

// 9 -------------------------------------------------------------------------
Outcome metric_units() {
  const std::vector<bool> gt{true, true, true, true, false};
  const std::vector<std::size_t> sel{0, 1, 4};
  const EvalReport r = match_prf(sel, gt);
  const std::vector<double> ones{1, 1, 1, 1}, mixed{3, 8, 50}, zeros(4, 0.0);
  const std::vector<double> fails(4, std::numeric_limits<double>::infinity());
  const std::vector<std::pair<double, double>> cases{
      {r.precision, 2.0 / 3.0},
      {r.recall, 0.5},
      {r.f1, 4.0 / 7.0},
      {exact_auc(zeros, 5.0), 1.0},
      {exact_auc(fails, 5.0), 0.0},
      {exact_auc(ones, 5.0), 0.8},
      {hist_auc(zeros, 20.0), 1.0},
      {hist_auc(ones, 5.0), 1.0},
      {hist_auc(mixed, 10.0), 0.5},
      {map_at(mixed, 10.0), 2.0 / 3.0},
      {map_at(zeros, 1.0), 1.0},
      {map_at(mixed, 1.0), 0.0},
  };
  double worst = 0.0;
  for (const auto& [got, want] : cases) worst = std::max(worst, std::abs(got - want));

  std::mt19937_64 gen(9);
  std::exponential_distribution<double> ex(1.0 / 10.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int non_monotone = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> errs(50);
    for (double& x : errs) x = u(gen) < 0.1 ? std::numeric_limits<double>::infinity() : ex(gen);
    const double ref = exact_auc(errs, 20.0);
    const double g5 = hist_auc(errs, 20.0, 5.0) - ref;
    const double g1 = hist_auc(errs, 20.0, 1.0) - ref;
    const double g01 = hist_auc(errs, 20.0, 0.1) - ref;
    if (!(g5 >= g1 && g1 >= g01 && g01 >= -1e-12)) ++non_monotone;
  }
  return {worst <= 1e-12 && non_monotone == 0,
          fmt("max worked-example err %.2g, ", worst) + std::to_string(non_monotone) +
              "/100 lists with a non-shrinking gap"};
}

// 10 ------------------------------------------------------------------------
Outcome runtime_budget() {
  SynthConfig cfg;
  cfg.size1 = ImageSize(1024, 768);
  cfg.size2 = ImageSize(1024, 768);
  cfg.n_patches = 20;
  cfg.keypoints_per_patch = 50;
  cfg.n_outliers = 7000;
  cfg.descriptor_dim = 128;
  cfg.noise_sigma = 1.0;
  cfg.rng_seed = 10;
  const SynthScene sc = generate_scene(cfg);

  double best_total = std::numeric_limits<double>::infinity();
  double best_filter = std::numeric_limits<double>::infinity();
  std::size_t kept = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = Clock::now();
    const auto matches = nn_match(sc.k1, sc.k2);
    const auto t1 = Clock::now();
    const FilterResult r =
        adalam_filter(sc.k1, sc.k2, sc.size1, sc.size2, matches, AdalamParams{});
    const double filter_s = seconds_since(t1);
    best_total = std::min(best_total, seconds_since(t0));
    best_filter = std::min(best_filter, filter_s);
    kept = r.selected.size();
  }
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  return {best_total <= 2.0 && best_filter <= 0.25,
          fmt("nn_match+filter %.0f ms, filter %.0f ms, ", 1e3 * best_total,
              1e3 * best_filter) +
              std::to_string(kept) + " kept, " + std::to_string(cores) + " core(s)"};
}

}  // namespace

int main() {
  report(1, "confidence-oracle", confidence_oracle);
  report(2, "affine-round-trip", affine_round_trip);
  report(3, "nms-oracle", nms_oracle);
  report(4, "easy-suite", easy_suite);
  report(5, "null-calibration", null_suite);
  report(6, "ablation-direction", ablation_direction);
  report(7, "invariance", invariance_suite);
  report(8, "determinism", determinism);
  report(9, "metric-units", metric_units);
  report(10, "runtime-budget", runtime_budget);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}

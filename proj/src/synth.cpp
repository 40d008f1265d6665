#include "adalam/synth.hpp"

#include "adalam/adalam.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

namespace adalam {
namespace {

constexpr int kMaxPlacementTries = 10000;

Eigen::Matrix2d rotation(double theta) {
  Eigen::Matrix2d r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

double random_angle(Rng& rng) { return wrap_angle(rng.uniform(-kPi, kPi)); }

Eigen::VectorXd random_unit(Rng& rng, int dim) {
  Eigen::VectorXd d(dim);
  for (int k = 0; k < dim; ++k) d[k] = rng.normal();
  const double n = d.norm();
  if (n == 0.0) {
    d.setZero();
    d[0] = 1.0;
    return d;
  }
  return d / n;
}

// A = R(theta) * Q(phi) diag(s * a, s / a) Q(phi)^T. The stretch factor is
// symmetric positive definite, so theta is exactly the polar rotation and the
// condition number is a^2.
Eigen::Matrix2d sample_linear(Rng& rng, const SynthConfig& cfg, double base_scale) {
  if (cfg.motion == PatchMotion::kIdentity) return Eigen::Matrix2d::Identity();
  const double theta =
      cfg.motion == PatchMotion::kFixedRotation ? cfg.rotation_rad : random_angle(rng);
  const double s = base_scale * log_uniform(rng, 0.7, 1.4);
  const double a = log_uniform(rng, 1.0 / 1.3, 1.3);
  const Eigen::Matrix2d q = rotation(rng.uniform(0.0, kPi));
  const Eigen::Matrix2d stretch =
      q * Eigen::Vector2d(s * a, s / a).asDiagonal() * q.transpose();
  return rotation(theta) * stretch;
}

// Uniform in [margin, w - margin] x [margin, h - margin]; a margin wider
// than the image collapses to the centre line. Draws x before y.
Eigen::Vector2d uniform_point(Rng& rng, double w, double h, double margin) {
  const double x = rng.uniform(std::min(margin, w / 2), std::max(w - margin, w / 2));
  const double y = rng.uniform(std::min(margin, h / 2), std::max(h - margin, h / 2));
  return {x, y};
}

struct Correspondence {
  Keypoint p1;
  Keypoint p2;
  double ratio = 0.0;
  bool inlier = false;
  std::optional<int> patch;
};

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

void SynthConfig::validate() const {
  if (size1.width <= 0 || size1.height <= 0 || size2.width <= 0 || size2.height <= 0) {
    throw InvalidArgument("SynthConfig: image sizes must be positive");
  }
  if (n_patches < 0 || keypoints_per_patch < 0 || n_outliers < 0) {
    throw InvalidArgument("SynthConfig: counts must be >= 0");
  }
  if (static_cast<long long>(n_patches) * keypoints_per_patch + n_outliers <= 0) {
    throw InvalidArgument("SynthConfig: scene has no keypoints");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("SynthConfig: noise_sigma < 0");
  if (descriptor_dim < 2) throw InvalidArgument("SynthConfig: descriptor_dim < 2");
  if (!(patch_radius_fraction > 0.0 && patch_radius_fraction <= 1.0)) {
    throw InvalidArgument("SynthConfig: patch_radius_fraction must lie in (0, 1]");
  }
  if (!(area_ratio > 0.0)) throw InvalidArgument("SynthConfig: area_ratio <= 0");
  auto range_ok = [](double lo, double hi) { return 0.0 <= lo && lo <= hi && hi <= 1.0; };
  if (!range_ok(inlier_ratio_min, inlier_ratio_max) ||
      !range_ok(outlier_ratio_min, outlier_ratio_max)) {
    throw InvalidArgument("SynthConfig: ratio ranges must lie in [0, 1]");
  }
}

std::size_t SynthScene::inlier_count() const {
  return static_cast<std::size_t>(std::count(gt_inlier.begin(), gt_inlier.end(), true));
}

FrameChange frame_change(const Eigen::Matrix2d& a) {
  const double det = a.determinant();
  if (!(det > 0.0)) throw InvalidArgument("frame_change: affine must preserve orientation");
  return {std::atan2(a(1, 0) - a(0, 1), a(0, 0) + a(1, 1)), std::sqrt(det)};
}

SynthScene generate_scene(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  SynthScene scene;
  scene.size1 = cfg.size1;
  scene.size2 = cfg.size2;

  const double r1 = compute_radius(cfg.size1, cfg.area_ratio);
  const double r2 = compute_radius(cfg.size2, cfg.area_ratio);
  const double patch_radius = cfg.patch_radius_fraction * r1;
  const double w1 = cfg.size1.width, h1 = cfg.size1.height;
  const double w2 = cfg.size2.width, h2 = cfg.size2.height;

  auto random_frame = [&] {
    return std::pair{log_uniform(rng, 1.0, 8.0), random_angle(rng)};
  };

  // Patch centres in image 1, pairwise at least three patch radii apart.
  std::vector<Eigen::Vector2d> centers;
  for (int p = 0; p < cfg.n_patches; ++p) {
    bool placed = false;
    for (int t = 0; t < kMaxPlacementTries && !placed; ++t) {
      const Eigen::Vector2d c = uniform_point(rng, w1, h1, patch_radius);
      placed = std::all_of(centers.begin(), centers.end(), [&](const Eigen::Vector2d& o) {
        return (o - c).norm() >= 3.0 * patch_radius;
      });
      if (placed) centers.push_back(c);
    }
    if (!placed) {
      throw InvalidArgument("SynthConfig: cannot place " + std::to_string(cfg.n_patches) +
                            " separated patches in image 1");
    }
  }

  std::vector<Correspondence> corr;
  corr.reserve(static_cast<std::size_t>(cfg.n_patches * cfg.keypoints_per_patch +
                                        cfg.n_outliers));
  for (int p = 0; p < cfg.n_patches; ++p) {
    const Eigen::Matrix2d linear = sample_linear(rng, cfg, r2 / r1);
    const FrameChange change = frame_change(linear);
    const double reach = linear.jacobiSvd().singularValues()[0] * patch_radius;
    const Eigen::Vector2d c2 = uniform_point(rng, w2, h2, reach);
    PatchAffine affine{linear, c2 - linear * centers[p]};
    scene.patch_affines.push_back(affine);

    for (int k = 0; k < cfg.keypoints_per_patch; ++k) {
      const double rho = patch_radius * std::sqrt(rng.uniform());
      const double phi = rng.uniform(-kPi, kPi);
      const Eigen::Vector2d x1 = centers[p] + rho * Eigen::Vector2d(std::cos(phi), std::sin(phi));
      Eigen::Vector2d x2 = affine.apply(x1);
      if (cfg.noise_sigma > 0.0) {
        // Isotropic Gaussian truncated at 3 sigma.
        Eigen::Vector2d n;
        do {
          const double nx = rng.normal();
          const double ny = rng.normal();
          n = Eigen::Vector2d(nx, ny);
        } while (n.squaredNorm() > 9.0);
        x2 += cfg.noise_sigma * n;
      }
      const auto [sigma1, alpha1] = random_frame();
      double sigma2, alpha2;
      if (cfg.frame_consistent) {
        sigma2 = sigma1 * change.scale;
        alpha2 = wrap_angle(alpha1 + change.rotation);
      } else {
        std::tie(sigma2, alpha2) = random_frame();
      }
      Eigen::VectorXd d1 = random_unit(rng, cfg.descriptor_dim);
      Eigen::VectorXd d2 = (d1 + 0.05 * random_unit(rng, cfg.descriptor_dim)).normalized();
      const double ratio = rng.uniform(cfg.inlier_ratio_min, cfg.inlier_ratio_max);
      corr.push_back({Keypoint(x1.x(), x1.y(), sigma1, alpha1, std::move(d1)),
                      Keypoint(x2.x(), x2.y(), sigma2, alpha2, std::move(d2)), ratio,
                      true, p});
    }
  }

  for (int k = 0; k < cfg.n_outliers; ++k) {
    const Eigen::Vector2d x1 = uniform_point(rng, w1, h1, 0.0);
    const Eigen::Vector2d x2 = uniform_point(rng, w2, h2, 0.0);
    const auto [sigma1, alpha1] = random_frame();
    const auto [sigma2, alpha2] = random_frame();
    const double ratio = rng.uniform(cfg.outlier_ratio_min, cfg.outlier_ratio_max);
    corr.push_back({Keypoint(x1.x(), x1.y(), sigma1, alpha1,
                             random_unit(rng, cfg.descriptor_dim)),
                    Keypoint(x2.x(), x2.y(), sigma2, alpha2,
                             random_unit(rng, cfg.descriptor_dim)),
                    ratio, false, std::nullopt});
  }

  // Fisher-Yates: interleave patches and clutter in K1, scramble K2.
  auto shuffle = [&](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[rng.below(i)]);
    }
  };
  shuffle(corr);
  std::vector<std::size_t> slot2(corr.size());
  std::iota(slot2.begin(), slot2.end(), std::size_t{0});
  shuffle(slot2);

  std::vector<Keypoint> kp1(corr.size()), kp2(corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const double dist = (corr[i].p1.descriptor - corr[i].p2.descriptor).norm();
    kp1[i] = std::move(corr[i].p1);
    kp2[slot2[i]] = std::move(corr[i].p2);
    scene.matches.emplace_back(i, slot2[i], dist, corr[i].ratio);
    scene.gt_inlier.push_back(corr[i].inlier);
    scene.patch_of_match.push_back(corr[i].patch);
  }
  scene.k1 = KeypointSet(std::move(kp1));
  scene.k2 = KeypointSet(std::move(kp2));
  return scene;
}

}  // namespace adalam

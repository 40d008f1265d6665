#pragma once

#include "adalam/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace adalam {

/// Portable random source: std::mt19937_64 (bit-exact by the C++ standard)
/// with hand-written conversions, since the standard distributions are not
/// reproducible across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

enum class PatchMotion {
  kRandom,          ///< rotation * scale * shear, condition number <= 10
  kIdentity,        ///< A = I
  kFixedRotation,   ///< random affine with its rotation pinned to rotation_rad
};

struct SynthConfig {
  ImageSize size1{640, 480};
  ImageSize size2{640, 480};
  int n_patches = 5;
  int keypoints_per_patch = 20;
  int n_outliers = 233;
  /// Image-2 position noise; Gaussian per axis, truncated at 3 sigma radially.
  double noise_sigma = 0.0;
  int descriptor_dim = 32;
  /// Informational only; the realised ratio follows from the counts.
  double inlier_ratio_target = 0.3;
  std::uint64_t rng_seed = 0;
  bool frame_consistent = true;

  PatchMotion motion = PatchMotion::kRandom;
  double rotation_rad = 0.0;
  /// Radius of each patch in image 1 as a fraction of the seed radius.
  double patch_radius_fraction = 1.0;
  /// Area ratio used to derive the seed radius.
  double area_ratio = 100.0;
  /// Ratio-test scores are drawn uniformly from these ranges.
  double inlier_ratio_min = 0.05;
  double inlier_ratio_max = 0.6;
  double outlier_ratio_min = 0.6;
  double outlier_ratio_max = 1.0;

  void validate() const;
};

/// Ground-truth map of one patch: x2 = linear * x1 + translation.
struct PatchAffine {
  Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();

  Eigen::Vector2d apply(const Eigen::Vector2d& x) const {
    return linear * x + translation;
  }
};

struct SynthScene {
  ImageSize size1;
  ImageSize size2;
  KeypointSet k1;
  KeypointSet k2;
  std::vector<PutativeMatch> matches;
  std::vector<bool> gt_inlier;
  std::vector<PatchAffine> patch_affines;
  std::vector<std::optional<int>> patch_of_match;

  std::size_t inlier_count() const;
};

/// Rotation angle and isotropic scale of an affine's polar decomposition.
struct FrameChange {
  double rotation = 0.0;
  double scale = 1.0;
};
FrameChange frame_change(const Eigen::Matrix2d& linear);

/// Planar patches under independent local affine motion plus uniformly
/// scattered outliers. Deterministic in config.rng_seed. With n_patches = 0
/// the scene is pure uniform clutter.
SynthScene generate_scene(const SynthConfig& config);

}  // namespace adalam

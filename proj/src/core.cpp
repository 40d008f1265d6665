#include "adalam/core.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace adalam {

double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw InvalidArgument("wrap_angle: non-finite angle");
  }
  constexpr double kTwoPi = 2.0 * kPi;
  double r = std::fmod(theta, kTwoPi);  // in (-2pi, 2pi)
  if (r > kPi) {
    r -= kTwoPi;
  } else if (r <= -kPi) {
    r += kTwoPi;
  }
  // Rounding in the adjustment can land exactly on -pi.
  if (r <= -kPi) r = kPi;
  return r;
}

ImageSize::ImageSize(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) {
    throw InvalidArgument("ImageSize: width and height must be positive, got " +
                          std::to_string(w) + "x" + std::to_string(h));
  }
}

Keypoint::Keypoint(double x, double y, double sigma_, double alpha_,
                   Eigen::VectorXd descriptor_)
    : position(x, y), sigma(sigma_), alpha(alpha_),
      descriptor(std::move(descriptor_)) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw InvalidArgument("Keypoint: non-finite position");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("Keypoint: sigma must be positive and finite");
  }
  if (!std::isfinite(alpha) || alpha <= -kPi || alpha > kPi) {
    throw InvalidArgument("Keypoint: alpha must lie in (-pi, pi]");
  }
  if (descriptor.size() < 1) {
    throw InvalidArgument("Keypoint: empty descriptor");
  }
  if (!descriptor.allFinite()) {
    throw InvalidArgument("Keypoint: non-finite descriptor entry");
  }
}

KeypointSet::KeypointSet(std::vector<Keypoint> keypoints)
    : keypoints_(std::move(keypoints)) {
  if (keypoints_.empty()) return;
  dim_ = static_cast<int>(keypoints_.front().descriptor.size());
  for (const auto& kp : keypoints_) {
    if (kp.descriptor.size() != dim_) {
      throw InvalidArgument("KeypointSet: inconsistent descriptor dimension");
    }
  }
}

PutativeMatch::PutativeMatch(std::size_t i1, std::size_t i2, double dist_,
                             double ratio_)
    : idx1(i1), idx2(i2), dist(dist_), ratio(ratio_) {
  if (!(dist >= 0.0) || !std::isfinite(dist)) {
    throw InvalidArgument("PutativeMatch: dist must be finite and >= 0");
  }
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw InvalidArgument("PutativeMatch: ratio must lie in [0, 1]");
  }
}

void check_unique_idx1(const std::vector<PutativeMatch>& matches) {
  std::unordered_set<std::size_t> seen;
  seen.reserve(matches.size());
  for (const auto& m : matches) {
    if (!seen.insert(m.idx1).second) {
      throw InvalidArgument("duplicate idx1 " + std::to_string(m.idx1) +
                            " in match set");
    }
  }
}

void AdalamParams::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(area_ratio)) throw InvalidArgument("area_ratio must be > 0");
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be >= 1");
  }
  if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  if (!positive(t_alpha)) throw InvalidArgument("t_alpha must be > 0");
  if (!positive(t_sigma)) throw InvalidArgument("t_sigma must be > 0");
  if (!positive(t_c)) throw InvalidArgument("t_c must be > 0");
  if (t_n < 2) throw InvalidArgument("t_n must be >= 2");
  if (fixed_threshold && !positive(*fixed_threshold)) {
    throw InvalidArgument("fixed_threshold must be > 0");
  }
  if (!positive(eps_residual)) throw InvalidArgument("eps_residual must be > 0");
}

Seed::Seed(std::size_t idx, double r1, double r2)
    : match_index(idx), radius1(r1), radius2(r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) {
    throw InvalidArgument("Seed: radii must be positive");
  }
}

}  // namespace adalam

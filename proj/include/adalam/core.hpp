#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace adalam {

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientKeypoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// Angles
// ----------------------------------------------------------------------------

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi]. Odd multiples of pi map to +pi.
double wrap_angle(double theta);

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// ----------------------------------------------------------------------------
// Domain types
// ----------------------------------------------------------------------------

struct ImageSize {
  int width = 0;
  int height = 0;

  ImageSize() = default;
  ImageSize(int w, int h);

  double area() const {
    return static_cast<double>(width) * static_cast<double>(height);
  }
  bool operator==(const ImageSize&) const = default;
};

/// A detected keypoint: position, local frame (scale, orientation) and
/// descriptor.
struct Keypoint {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double sigma = 1.0;
  double alpha = 0.0;
  Eigen::VectorXd descriptor;

  Keypoint() = default;
  Keypoint(double x, double y, double sigma, double alpha,
           Eigen::VectorXd descriptor);

  double x() const { return position.x(); }
  double y() const { return position.y(); }
};

/// Keypoints of one image. All descriptors share one runtime dimension.
class KeypointSet {
 public:
  KeypointSet() = default;
  explicit KeypointSet(std::vector<Keypoint> keypoints);

  std::size_t size() const { return keypoints_.size(); }
  bool empty() const { return keypoints_.empty(); }
  /// Descriptor dimension; 0 for an empty set.
  int dim() const { return dim_; }

  const Keypoint& operator[](std::size_t i) const { return keypoints_[i]; }
  const std::vector<Keypoint>& keypoints() const { return keypoints_; }
  auto begin() const { return keypoints_.begin(); }
  auto end() const { return keypoints_.end(); }

 private:
  std::vector<Keypoint> keypoints_;
  int dim_ = 0;
};

/// Nearest-neighbour correspondence from keypoint set 1 into set 2.
struct PutativeMatch {
  std::size_t idx1 = 0;
  std::size_t idx2 = 0;
  double dist = 0.0;
  double ratio = 0.0;

  PutativeMatch() = default;
  PutativeMatch(std::size_t i1, std::size_t i2, double dist, double ratio);

  bool operator==(const PutativeMatch&) const = default;
};

/// Throws unless idx1 values are unique across the set.
void check_unique_idx1(const std::vector<PutativeMatch>& matches);

struct AdalamParams {
  /// Ratio between image area and the seed-suppression disk area.
  double area_ratio = 100.0;
  /// Neighbourhood radius as a multiple of the seed radius.
  double lambda = 4.0;
  int iterations = 128;
  double t_alpha = kPi / 6.0;
  /// Bound on |ln(scale ratio difference)|.
  double t_sigma = 1.5;
  double t_c = 200.0;
  int t_n = 6;
  bool use_side_info = true;
  bool use_refit = true;
  /// When set, inliers are residuals <= this many pixels instead of the
  /// adaptive confidence rule.
  std::optional<double> fixed_threshold;
  /// Residuals are clamped below at eps_residual * R2.
  double eps_residual = 1e-6;

  /// Throws InvalidArgument if any field is out of range.
  void validate() const;
  bool operator==(const AdalamParams&) const = default;
};

struct Seed {
  std::size_t match_index = 0;
  double radius1 = 0.0;
  double radius2 = 0.0;

  Seed() = default;
  Seed(std::size_t match_index, double radius1, double radius2);
};

/// Matches compatible with a seed, in seed-centred coordinates.
struct Neighborhood {
  Seed seed;
  std::vector<std::size_t> members;
  std::vector<Eigen::Vector2d> centered1;
  std::vector<Eigen::Vector2d> centered2;

  std::size_t size() const { return members.size(); }
};

/// Linear 2x2 map acting on seed-centred coordinates.
template <typename Scalar>
struct AffineModelT {
  using Matrix = Eigen::Matrix<Scalar, 2, 2>;
  Matrix linear = Matrix::Identity();

  AffineModelT() = default;
  explicit AffineModelT(const Matrix& m) : linear(m) {}
  AffineModelT(Scalar a11, Scalar a12, Scalar a21, Scalar a22) {
    linear << a11, a12, a21, a22;
  }

  Scalar a11() const { return linear(0, 0); }
  Scalar a12() const { return linear(0, 1); }
  Scalar a21() const { return linear(1, 0); }
  Scalar a22() const { return linear(1, 1); }
  bool is_finite() const { return linear.allFinite(); }
};

using AffineModel = AffineModelT<double>;

struct SeedReport {
  std::size_t seed_match = 0;
  /// Index of the best iteration; -1 when no iteration ran.
  int best_iteration = -1;
  std::size_t inlier_count = 0;
  bool accepted = false;

  bool operator==(const SeedReport&) const = default;
};

struct FilterResult {
  /// Sorted, duplicate-free indices into the input match list.
  std::vector<std::size_t> selected;
  std::vector<SeedReport> seed_reports;
};

}  // namespace adalam

#pragma once

#include "adalam/core.hpp"

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

namespace adalam {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// Relative determinant below which two source vectors count as collinear.
inline constexpr double kDegenerateTolerance = 1e-9;

/// A correspondence in seed-centred coordinates: source u (image 1) and
/// target v (image 2).
template <typename Scalar>
struct CenteredPair {
  Vec2<Scalar> u;
  Vec2<Scalar> v;
};

/// Exact centred affine through two correspondences: A*u_p = v_p and
/// A*u_q = v_q. Returns nullopt when |det[u_p u_q]| is below
/// kDegenerateTolerance * max(|u_p|, |u_q|)^2, including the all-zero case.
template <typename Scalar>
std::optional<AffineModelT<Scalar>> fit_affine_minimal(
    const Vec2<Scalar>& u_p, const Vec2<Scalar>& v_p,
    const Vec2<Scalar>& u_q, const Vec2<Scalar>& v_q) {
  const Scalar det = u_p.x() * u_q.y() - u_q.x() * u_p.y();
  const Scalar scale = std::max(u_p.squaredNorm(), u_q.squaredNorm());
  if (det == Scalar(0) ||
      std::abs(det) < Scalar(kDegenerateTolerance) * scale) {
    return std::nullopt;
  }
  // A = [v_p v_q] * [u_p u_q]^-1
  Eigen::Matrix<Scalar, 2, 2> src_inv;
  src_inv << u_q.y(), -u_q.x(), -u_p.y(), u_p.x();
  src_inv /= det;
  Eigen::Matrix<Scalar, 2, 2> dst;
  dst << v_p, v_q;
  AffineModelT<Scalar> model(dst * src_inv);
  if (!model.is_finite()) return std::nullopt;
  return model;
}

template <typename Scalar>
std::optional<AffineModelT<Scalar>> fit_affine_minimal(
    const CenteredPair<Scalar>& p, const CenteredPair<Scalar>& q) {
  return fit_affine_minimal<Scalar>(p.u, p.v, q.u, q.v);
}

/// Accumulates the normal equations of min sum |A*u - v|^2.
template <typename Scalar>
struct AffineNormalEquations {
  Eigen::Matrix<Scalar, 2, 2> scatter = Eigen::Matrix<Scalar, 2, 2>::Zero();  // sum u u^T
  Eigen::Matrix<Scalar, 2, 2> cross = Eigen::Matrix<Scalar, 2, 2>::Zero();    // sum v u^T

  void add(const Vec2<Scalar>& u, const Vec2<Scalar>& v) {
    scatter.noalias() += u * u.transpose();
    cross.noalias() += v * u.transpose();
  }

  /// A = cross * scatter^-1, or nullopt when the scatter has rank < 2. The
  /// rank test mirrors the minimal-sample one: det(S) is the squared source
  /// determinant for two points, so it is compared against tol^2 * tr(S)^2.
  std::optional<AffineModelT<Scalar>> solve() const {
    const Scalar det = scatter.determinant();
    const Scalar trace = scatter.trace();
    const Scalar tol = Scalar(kDegenerateTolerance);
    if (!(det > Scalar(0)) || det < tol * tol * trace * trace) {
      return std::nullopt;
    }
    Eigen::Matrix<Scalar, 2, 2> inv;
    inv << scatter(1, 1), -scatter(0, 1), -scatter(1, 0), scatter(0, 0);
    inv /= det;
    AffineModelT<Scalar> model(cross * inv);
    if (!model.is_finite()) return std::nullopt;
    return model;
  }
};

/// Least-squares centred affine over the given correspondences.
template <typename Scalar>
std::optional<AffineModelT<Scalar>> fit_affine_lsq(
    std::span<const CenteredPair<Scalar>> pairs) {
  if (pairs.size() < 2) return std::nullopt;
  AffineNormalEquations<Scalar> ne;
  for (const auto& p : pairs) ne.add(p.u, p.v);
  return ne.solve();
}

/// Least-squares fit over a subset of parallel source/target arrays.
template <typename Scalar, typename IndexRange>
std::optional<AffineModelT<Scalar>> fit_affine_lsq(
    std::span<const Vec2<Scalar>> sources, std::span<const Vec2<Scalar>> targets,
    const IndexRange& subset) {
  AffineNormalEquations<Scalar> ne;
  std::size_t n = 0;
  for (auto k : subset) {
    ne.add(sources[k], targets[k]);
    ++n;
  }
  if (n < 2) return std::nullopt;
  return ne.solve();
}

/// |A*u - v|
template <typename Scalar>
Scalar residual(const AffineModelT<Scalar>& model, const Vec2<Scalar>& u,
                const Vec2<Scalar>& v) {
  return (model.linear * u - v).norm();
}

}  // namespace adalam

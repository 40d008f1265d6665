#pragma once

#include "adalam/affine.hpp"
#include "adalam/core.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace adalam {

/// Seed suppression radius R = sqrt(w*h / (pi * area_ratio)).
double compute_radius(const ImageSize& size, double area_ratio);

/// Seed confidence of a match: higher is more distinctive.
inline double seed_confidence(const PutativeMatch& m) { return 1.0 - m.ratio; }

/// Radius non-maximum suppression on image-1 positions. A match is a seed
/// iff no other match within radius1 has strictly higher confidence, or
/// equal confidence and a lower index. Returns match indices ascending.
std::vector<std::size_t> select_seeds(std::span<const PutativeMatch> matches,
                                      const KeypointSet& k1, double radius1);

/// Collects the matches spatially compatible with the seed in both images
/// and, with side information enabled, consistent in relative orientation
/// and scale. Members are ordered by ratio ascending (ties by match index),
/// which is the sampling order used by verify_seed.
Neighborhood assemble_neighborhood(const Seed& seed,
                                   std::span<const PutativeMatch> matches,
                                   const KeypointSet& k1, const KeypointSet& k2,
                                   const AdalamParams& params);

/// Same result as calling assemble_neighborhood for every seed, using a
/// spatial grid instead of a scan over all matches per seed.
std::vector<Neighborhood> assemble_neighborhoods(
    std::span<const Seed> seeds, std::span<const PutativeMatch> matches,
    const KeypointSet& k1, const KeypointSet& k2, const AdalamParams& params,
    int num_threads = 0);

/// |A*x1 - x2| per member, in member order.
std::vector<double> residuals(const AffineModel& model,
                              const Neighborhood& neighborhood);

struct RankedConfidence {
  std::size_t member = 0;
  double confidence = 0.0;
};

/// Confidence of the k-th smallest residual r_k being the worst inlier:
/// (k+1) / (n * r_k^2 / R2^2), with r_k clamped below at eps * R2.
double rank_confidence(std::size_t rank, std::size_t n, double residual,
                       double radius2, double eps_residual);

/// Residuals ranked ascending (ties by member index) with their confidences.
std::vector<RankedConfidence> confidences(std::span<const double> residuals,
                                          double radius2, double eps_residual);

/// Adaptive mode: members at every rank up to the largest rank whose
/// confidence reaches t_c, in rank order. Fixed mode: members whose residual
/// is within the fixed threshold, in member order.
std::vector<std::size_t> select_inliers(std::span<const RankedConfidence> ranked,
                                        double t_c,
                                        std::optional<double> fixed_threshold,
                                        std::span<const double> residuals);

struct IterationOutcome {
  int iteration_index = 0;
  AffineModel model;
  /// Indices into the neighbourhood member list, ascending.
  std::vector<std::size_t> inlier_member_indices;
  double confidence_of_worst_inlier = 0.0;
};

struct SeedVerdict {
  bool accepted = false;
  /// Best-scoring iteration; empty when no non-degenerate sample existed.
  std::optional<IterationOutcome> best;
};

/// Fixed-budget RANSAC over the neighbourhood with deterministic,
/// confidence-ordered minimal samples and adaptive inlier thresholds.
SeedVerdict verify_seed(const Neighborhood& neighborhood,
                        const AdalamParams& params);

/// End-to-end filter: seeds, neighbourhoods, verification, union of inliers.
FilterResult adalam_filter(const KeypointSet& k1, const KeypointSet& k2,
                           const ImageSize& size1, const ImageSize& size2,
                           std::span<const PutativeMatch> matches,
                           const AdalamParams& params, int num_threads = 0);

}  // namespace adalam

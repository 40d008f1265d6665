#include "adalam/adalam.hpp"

#include "adalam/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

namespace adalam {
namespace {

// Relative frame (orientation difference, scale ratio) induced by a match.
struct MatchFrame {
  double alpha = 0.0;
  double sigma = 1.0;
};

MatchFrame match_frame(const PutativeMatch& m, const KeypointSet& k1,
                       const KeypointSet& k2) {
  const Keypoint& a = k1[m.idx1];
  const Keypoint& b = k2[m.idx2];
  return {wrap_angle(b.alpha - a.alpha), b.sigma / a.sigma};
}

void check_match_indices(std::span<const PutativeMatch> matches,
                         const KeypointSet& k1, const KeypointSet& k2) {
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (matches[i].idx1 >= k1.size() || matches[i].idx2 >= k2.size()) {
      throw InvalidArgument("match " + std::to_string(i) +
                            " references a keypoint out of range");
    }
  }
}

// Shared membership test so the scan and grid paths agree bit for bit.
class NeighborTest {
 public:
  NeighborTest(std::span<const PutativeMatch> matches, const KeypointSet& k1,
               const KeypointSet& k2, const AdalamParams& params)
      : matches_(matches), k1_(k1), k2_(k2), params_(params) {
    if (params.use_side_info) {
      frames_.reserve(matches.size());
      for (const auto& m : matches) frames_.push_back(match_frame(m, k1, k2));
    }
  }

  bool operator()(const Seed& seed, std::size_t candidate) const {
    const PutativeMatch& s = matches_[seed.match_index];
    const PutativeMatch& m = matches_[candidate];
    const double r1 = params_.lambda * seed.radius1;
    const double r2 = params_.lambda * seed.radius2;
    if ((k1_[m.idx1].position - k1_[s.idx1].position).squaredNorm() > r1 * r1) {
      return false;
    }
    if ((k2_[m.idx2].position - k2_[s.idx2].position).squaredNorm() > r2 * r2) {
      return false;
    }
    if (!params_.use_side_info) return true;
    const MatchFrame& fs = frames_[seed.match_index];
    const MatchFrame& fm = frames_[candidate];
    if (std::abs(wrap_angle(fs.alpha - fm.alpha)) > params_.t_alpha) return false;
    return std::abs(std::log(fs.sigma / fm.sigma)) <= params_.t_sigma;
  }

  Neighborhood build(const Seed& seed, std::vector<std::size_t> members) const {
    // The seed is always a member, even when its own frame test is degenerate.
    if (std::find(members.begin(), members.end(), seed.match_index) == members.end()) {
      members.push_back(seed.match_index);
    }
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      if (matches_[a].ratio != matches_[b].ratio) {
        return matches_[a].ratio < matches_[b].ratio;
      }
      return a < b;
    });
    Neighborhood nb;
    nb.seed = seed;
    const PutativeMatch& s = matches_[seed.match_index];
    const Eigen::Vector2d origin1 = k1_[s.idx1].position;
    const Eigen::Vector2d origin2 = k2_[s.idx2].position;
    nb.centered1.reserve(members.size());
    nb.centered2.reserve(members.size());
    for (std::size_t idx : members) {
      nb.centered1.push_back(k1_[matches_[idx].idx1].position - origin1);
      nb.centered2.push_back(k2_[matches_[idx].idx2].position - origin2);
    }
    nb.members = std::move(members);
    return nb;
  }

 private:
  std::span<const PutativeMatch> matches_;
  const KeypointSet& k1_;
  const KeypointSet& k2_;
  const AdalamParams& params_;
  std::vector<MatchFrame> frames_;
};

// Uniform grid over image-1 positions of the matches.
class MatchGrid {
 public:
  MatchGrid(std::span<const PutativeMatch> matches, const KeypointSet& k1,
            double cell)
      : cell_(cell) {
    cells_.reserve(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
      cells_[key(k1[matches[i].idx1].position)].push_back(i);
    }
  }

  /// Visits every match in the 3x3 block of cells around p, in no
  /// particular order.
  template <typename Fn>
  void for_each_near(const Eigen::Vector2d& p, Fn&& fn) const {
    const auto [cx, cy] = coords(p);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t idx : it->second) fn(idx);
      }
    }
  }

 private:
  std::pair<std::int64_t, std::int64_t> coords(const Eigen::Vector2d& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_))};
  }
  static std::uint64_t pack(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^
           (static_cast<std::uint64_t>(y) & 0xffffffffULL);
  }
  std::uint64_t key(const Eigen::Vector2d& p) const {
    const auto [cx, cy] = coords(p);
    return pack(cx, cy);
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

// Adaptive inlier selection restricted to members that can possibly reach
// t_c. Since (k+1) <= n, c_k >= t_c implies r_k^2 <= R2^2 / t_c, so every
// rank that could qualify lies in the prefix of residuals under that bound.
// The confidences of that prefix are computed exactly as in confidences().
struct AdaptiveSelector {
  double radius2;
  double eps_residual;
  double t_c;
  std::vector<std::pair<double, std::size_t>> scratch;

  double select(std::span<const double> res, std::vector<std::size_t>& inliers) {
    const std::size_t n = res.size();
    const double floor_r = eps_residual * radius2;
    const double bound_sq = radius2 * radius2 / t_c * (1.0 + 1e-9);
    scratch.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const double r = std::max(res[k], floor_r);
      if (r * r <= bound_sq) scratch.emplace_back(res[k], k);
    }
    std::sort(scratch.begin(), scratch.end());
    std::ptrdiff_t best_rank = -1;
    double worst_conf = 0.0;
    for (std::size_t k = 0; k < scratch.size(); ++k) {
      const double c = rank_confidence(k, n, scratch[k].first, radius2, eps_residual);
      if (c >= t_c) {
        best_rank = static_cast<std::ptrdiff_t>(k);
        worst_conf = c;
      }
    }
    inliers.clear();
    for (std::ptrdiff_t k = 0; k <= best_rank; ++k) {
      inliers.push_back(scratch[static_cast<std::size_t>(k)].second);
    }
    std::sort(inliers.begin(), inliers.end());
    return worst_conf;
  }
};

double fixed_select(std::span<const double> res, double threshold, double radius2,
                    double eps_residual, std::vector<std::size_t>& inliers) {
  inliers.clear();
  double worst = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    if (res[k] <= threshold) {
      inliers.push_back(k);
      worst = std::max(worst, res[k]);
    }
  }
  if (inliers.empty()) return 0.0;
  return rank_confidence(inliers.size() - 1, res.size(), worst, radius2, eps_residual);
}

void compute_residuals(const AffineModel& model, const Neighborhood& nb,
                       std::vector<double>& out) {
  out.resize(nb.size());
  for (std::size_t k = 0; k < nb.size(); ++k) {
    out[k] = residual(model, nb.centered1[k], nb.centered2[k]);
  }
}

}  // namespace

double compute_radius(const ImageSize& size, double area_ratio) {
  if (!(area_ratio > 0.0) || !std::isfinite(area_ratio)) {
    throw InvalidArgument("compute_radius: area_ratio must be > 0");
  }
  return std::sqrt(size.area() / (kPi * area_ratio));
}

std::vector<std::size_t> select_seeds(std::span<const PutativeMatch> matches,
                                      const KeypointSet& k1, double radius1) {
  if (!(radius1 > 0.0)) throw InvalidArgument("select_seeds: radius must be > 0");
  for (const auto& m : matches) {
    if (m.idx1 >= k1.size()) throw InvalidArgument("select_seeds: idx1 out of range");
  }
  const MatchGrid grid(matches, k1, radius1);
  const double r_sq = radius1 * radius1;
  std::vector<std::size_t> seeds;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Eigen::Vector2d& p = k1[matches[i].idx1].position;
    const double conf = seed_confidence(matches[i]);
    bool suppressed = false;
    grid.for_each_near(p, [&](std::size_t j) {
      if (suppressed || j == i) return;
      const double cj = seed_confidence(matches[j]);
      if (cj < conf || (cj == conf && j > i)) return;
      if ((k1[matches[j].idx1].position - p).squaredNorm() <= r_sq) suppressed = true;
    });
    if (!suppressed) seeds.push_back(i);
  }
  return seeds;
}

Neighborhood assemble_neighborhood(const Seed& seed,
                                   std::span<const PutativeMatch> matches,
                                   const KeypointSet& k1, const KeypointSet& k2,
                                   const AdalamParams& params) {
  if (seed.match_index >= matches.size()) {
    throw InvalidArgument("assemble_neighborhood: seed index out of range");
  }
  check_match_indices(matches, k1, k2);
  const NeighborTest test(matches, k1, k2, params);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (test(seed, i)) members.push_back(i);
  }
  return test.build(seed, std::move(members));
}

std::vector<Neighborhood> assemble_neighborhoods(
    std::span<const Seed> seeds, std::span<const PutativeMatch> matches,
    const KeypointSet& k1, const KeypointSet& k2, const AdalamParams& params,
    int num_threads) {
  std::vector<Neighborhood> out(seeds.size());
  if (seeds.empty()) return out;
  check_match_indices(matches, k1, k2);
  double max_r1 = 0.0;
  for (const auto& s : seeds) {
    if (s.match_index >= matches.size()) {
      throw InvalidArgument("assemble_neighborhoods: seed index out of range");
    }
    max_r1 = std::max(max_r1, s.radius1);
  }
  const NeighborTest test(matches, k1, k2, params);
  const MatchGrid grid(matches, k1, params.lambda * max_r1);
  parallel_for(seeds.size(), num_threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> members;
    for (std::size_t s = begin; s < end; ++s) {
      members.clear();
      const Eigen::Vector2d& p = k1[matches[seeds[s].match_index].idx1].position;
      grid.for_each_near(p, [&](std::size_t j) {
        if (test(seeds[s], j)) members.push_back(j);
      });
      out[s] = test.build(seeds[s], members);
    }
  });
  return out;
}

std::vector<double> residuals(const AffineModel& model,
                              const Neighborhood& neighborhood) {
  if (!model.is_finite()) throw InvalidArgument("residuals: non-finite model");
  std::vector<double> out;
  compute_residuals(model, neighborhood, out);
  return out;
}

double rank_confidence(std::size_t rank, std::size_t n, double residual,
                       double radius2, double eps_residual) {
  const double r = std::max(residual, eps_residual * radius2);
  const double rel = r / radius2;
  return static_cast<double>(rank + 1) / (static_cast<double>(n) * rel * rel);
}

std::vector<RankedConfidence> confidences(std::span<const double> res,
                                          double radius2, double eps_residual) {
  if (!(radius2 > 0.0)) throw InvalidArgument("confidences: R2 must be > 0");
  std::vector<std::size_t> order(res.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return res[a] < res[b]; });
  std::vector<RankedConfidence> out(res.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out[k] = {order[k],
              rank_confidence(k, res.size(), res[order[k]], radius2, eps_residual)};
  }
  return out;
}

std::vector<std::size_t> select_inliers(std::span<const RankedConfidence> ranked,
                                        double t_c,
                                        std::optional<double> fixed_threshold,
                                        std::span<const double> res) {
  std::vector<std::size_t> inliers;
  if (fixed_threshold) {
    for (std::size_t k = 0; k < res.size(); ++k) {
      if (res[k] <= *fixed_threshold) inliers.push_back(k);
    }
    return inliers;
  }
  std::ptrdiff_t best_rank = -1;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].confidence >= t_c) best_rank = static_cast<std::ptrdiff_t>(k);
  }
  for (std::ptrdiff_t k = 0; k <= best_rank; ++k) {
    inliers.push_back(ranked[static_cast<std::size_t>(k)].member);
  }
  return inliers;
}

SeedVerdict verify_seed(const Neighborhood& nb, const AdalamParams& params) {
  SeedVerdict verdict;
  const std::size_t n = nb.size();
  if (n < 2) return verdict;

  const double radius2 = nb.seed.radius2;
  AdaptiveSelector adaptive{radius2, params.eps_residual, params.t_c, {}};
  auto select = [&](std::span<const double> res, std::vector<std::size_t>& inliers) {
    if (params.fixed_threshold) {
      return fixed_select(res, *params.fixed_threshold, radius2, params.eps_residual,
                          inliers);
    }
    return adaptive.select(res, inliers);
  };

  const std::span<const Eigen::Vector2d> src(nb.centered1);
  const std::span<const Eigen::Vector2d> dst(nb.centered2);
  std::vector<double> res;
  std::vector<std::size_t> inliers;
  int iteration = 0;
  // Samples (i, j) with i < j over the confidence-ordered members, growing j.
  for (std::size_t j = 1; j < n && iteration < params.iterations; ++j) {
    for (std::size_t i = 0; i < j && iteration < params.iterations; ++i) {
      const auto minimal = fit_affine_minimal<double>(src[i], dst[i], src[j], dst[j]);
      if (!minimal) continue;
      AffineModel model = *minimal;
      compute_residuals(model, nb, res);
      double worst = select(res, inliers);
      if (params.use_refit && inliers.size() >= 2) {
        if (const auto refit = fit_affine_lsq<double>(src, dst, inliers)) {
          model = *refit;
          compute_residuals(model, nb, res);
          worst = select(res, inliers);
        }
      }
      if (!verdict.best || inliers.size() > verdict.best->inlier_member_indices.size()) {
        verdict.best = IterationOutcome{iteration, model, inliers, worst};
      }
      ++iteration;
    }
  }
  verdict.accepted =
      verdict.best &&
      verdict.best->inlier_member_indices.size() >= static_cast<std::size_t>(params.t_n);
  return verdict;
}

FilterResult adalam_filter(const KeypointSet& k1, const KeypointSet& k2,
                           const ImageSize& size1, const ImageSize& size2,
                           std::span<const PutativeMatch> matches,
                           const AdalamParams& params, int num_threads) {
  params.validate();
  FilterResult result;
  if (matches.empty()) return result;
  check_match_indices(matches, k1, k2);

  const double radius1 = compute_radius(size1, params.area_ratio);
  const double radius2 = compute_radius(size2, params.area_ratio);
  const auto seed_indices = select_seeds(matches, k1, radius1);
  std::vector<Seed> seeds;
  seeds.reserve(seed_indices.size());
  for (std::size_t idx : seed_indices) seeds.emplace_back(idx, radius1, radius2);

  const NeighborTest test(matches, k1, k2, params);
  const MatchGrid grid(matches, k1, params.lambda * radius1);

  std::vector<SeedVerdict> verdicts(seeds.size());
  std::vector<std::vector<std::size_t>> members_of(seeds.size());
  parallel_for(seeds.size(), num_threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> members;
    for (std::size_t s = begin; s < end; ++s) {
      members.clear();
      const Eigen::Vector2d& p = k1[matches[seeds[s].match_index].idx1].position;
      grid.for_each_near(p, [&](std::size_t j) {
        if (test(seeds[s], j)) members.push_back(j);
      });
      Neighborhood nb = test.build(seeds[s], members);
      verdicts[s] = verify_seed(nb, params);
      members_of[s] = std::move(nb.members);
    }
  });

  std::vector<char> chosen(matches.size(), 0);
  result.seed_reports.reserve(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    SeedReport report;
    report.seed_match = seeds[s].match_index;
    report.accepted = verdicts[s].accepted;
    if (const auto& best = verdicts[s].best) {
      report.best_iteration = best->iteration_index;
      report.inlier_count = best->inlier_member_indices.size();
      if (report.accepted) {
        for (std::size_t k : best->inlier_member_indices) chosen[members_of[s][k]] = 1;
      }
    }
    result.seed_reports.push_back(report);
  }
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (chosen[i]) result.selected.push_back(i);
  }
  return result;
}

}  // namespace adalam

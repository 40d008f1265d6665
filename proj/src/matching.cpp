#include "adalam/matching.hpp"

#include "adalam/parallel.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace adalam {
namespace {

constexpr std::size_t kBlockRows = 128;

struct NeighborPair {
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  double second_sq = std::numeric_limits<double>::infinity();
};

double exact_sq_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Column-major float copy of the descriptors, one column per keypoint.
Eigen::MatrixXf pack(const KeypointSet& set) {
  Eigen::MatrixXf out(set.dim(), static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = set[i].descriptor.cast<float>();
  }
  return out;
}

// For each query in `queries`, finds the nearest (and second-nearest) entry
// of `base` under exact double-precision L2. A float GEMM bounds the
// candidate set; every entry that could be first or second under exact
// arithmetic is rescored in double.
std::vector<NeighborPair> nearest_two(const KeypointSet& query_set,
                                      const std::vector<std::size_t>& queries,
                                      const KeypointSet& base,
                                      int num_threads) {
  std::vector<NeighborPair> out(queries.size());
  if (queries.empty() || base.empty()) return out;

  const Eigen::MatrixXf base_desc = pack(base);
  const Eigen::RowVectorXf base_sq = base_desc.colwise().squaredNorm();
  const double base_sq_max = base_sq.maxCoeff();
  const int dim = base.dim();
  const double float_eps = std::numeric_limits<float>::epsilon();
  const std::size_t n_blocks = (queries.size() + kBlockRows - 1) / kBlockRows;

  parallel_for(n_blocks, num_threads, [&](std::size_t b_begin, std::size_t b_end) {
    Eigen::MatrixXf block;
    Eigen::MatrixXf gram;
    std::vector<std::size_t> candidates;
    for (std::size_t b = b_begin; b < b_end; ++b) {
      const std::size_t row0 = b * kBlockRows;
      const std::size_t rows = std::min(kBlockRows, queries.size() - row0);
      block.resize(dim, static_cast<Eigen::Index>(rows));
      for (std::size_t r = 0; r < rows; ++r) {
        block.col(static_cast<Eigen::Index>(r)) =
            query_set[queries[row0 + r]].descriptor.cast<float>();
      }
      gram.noalias() = block.transpose() * base_desc;

      for (std::size_t r = 0; r < rows; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        const float q_sq = block.col(ri).squaredNorm();
        float m1 = std::numeric_limits<float>::infinity();
        float m2 = std::numeric_limits<float>::infinity();
        for (Eigen::Index j = 0; j < gram.cols(); ++j) {
          const float d = q_sq + base_sq[j] - 2.0f * gram(ri, j);
          if (d < m1) {
            m2 = m1;
            m1 = d;
          } else if (d < m2) {
            m2 = d;
          }
        }
        const double cutoff_ref = base.size() >= 2 ? m2 : m1;
        const double tol =
            (4.0 * dim + 16.0) * float_eps * (q_sq + base_sq_max) + 1e-30;
        const double cutoff = cutoff_ref + tol;
        candidates.clear();
        for (Eigen::Index j = 0; j < gram.cols(); ++j) {
          const double d = static_cast<double>(q_sq) + base_sq[j] - 2.0 * gram(ri, j);
          if (d <= cutoff) candidates.push_back(static_cast<std::size_t>(j));
        }

        const Eigen::VectorXd& q = query_set[queries[row0 + r]].descriptor;
        NeighborPair np;
        for (std::size_t j : candidates) {  // ascending index order
          const double d = exact_sq_distance(q, base[j].descriptor);
          if (d < np.best_sq) {
            np.second_sq = np.best_sq;
            np.best_sq = d;
            np.best = j;
          } else if (d < np.second_sq) {
            np.second_sq = d;
          }
        }
        out[row0 + r] = np;
      }
    }
  });
  return out;
}

void check_dims(const KeypointSet& k1, const KeypointSet& k2) {
  if (!k1.empty() && !k2.empty() && k1.dim() != k2.dim()) {
    throw InvalidArgument("descriptor dimension mismatch: " +
                          std::to_string(k1.dim()) + " vs " +
                          std::to_string(k2.dim()));
  }
}

}  // namespace

std::vector<PutativeMatch> nn_match(const KeypointSet& k1, const KeypointSet& k2,
                                    int num_threads) {
  if (k2.size() < 2) {
    throw InsufficientKeypoints("nn_match: need at least 2 keypoints in K2");
  }
  check_dims(k1, k2);
  std::vector<std::size_t> queries(k1.size());
  for (std::size_t i = 0; i < queries.size(); ++i) queries[i] = i;
  const auto pairs = nearest_two(k1, queries, k2, num_threads);

  std::vector<PutativeMatch> matches;
  matches.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double d1 = std::sqrt(pairs[i].best_sq);
    const double d2 = std::sqrt(pairs[i].second_sq);
    const double ratio = d1 >= d2 ? 1.0 : d1 / d2;
    matches.emplace_back(i, pairs[i].best, d1, ratio);
  }
  return matches;
}

std::vector<PutativeMatch> ratio_test_filter(
    const std::vector<PutativeMatch>& matches, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("ratio_test_filter: threshold must lie in (0, 1]");
  }
  std::vector<PutativeMatch> out;
  std::copy_if(matches.begin(), matches.end(), std::back_inserter(out),
               [threshold](const PutativeMatch& m) { return m.ratio <= threshold; });
  return out;
}

std::vector<PutativeMatch> mutual_nn_filter(
    const KeypointSet& k1, const KeypointSet& k2,
    const std::vector<PutativeMatch>& matches, int num_threads) {
  if (matches.empty()) return {};
  check_dims(k1, k2);
  for (const auto& m : matches) {
    if (m.idx1 >= k1.size() || m.idx2 >= k2.size()) {
      throw InvalidArgument("mutual_nn_filter: match index out of range");
    }
  }
  std::vector<std::size_t> targets;
  targets.reserve(matches.size());
  for (const auto& m : matches) targets.push_back(m.idx2);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  const auto reverse = nearest_two(k2, targets, k1, num_threads);
  std::vector<PutativeMatch> out;
  for (const auto& m : matches) {
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(targets.begin(), targets.end(), m.idx2) - targets.begin());
    if (reverse[pos].best == m.idx1) out.push_back(m);
  }
  return out;
}

}  // namespace adalam

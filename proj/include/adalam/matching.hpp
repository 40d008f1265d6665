#pragma once

#include "adalam/core.hpp"

#include <vector>

namespace adalam {

/// Brute-force L2 nearest-neighbour matching from K1 into K2. One match per
/// K1 keypoint, with ratio = nearest / second-nearest distance (1 when the
/// two are equal). Distance ties go to the smaller K2 index.
///
/// Distances are screened with a single-precision GEMM and then recomputed
/// exactly in double precision for every candidate that could be nearest or
/// second-nearest, so the result equals the exhaustive double computation.
std::vector<PutativeMatch> nn_match(const KeypointSet& k1, const KeypointSet& k2,
                                    int num_threads = 0);

/// Keeps matches with ratio <= threshold, preserving order.
std::vector<PutativeMatch> ratio_test_filter(
    const std::vector<PutativeMatch>& matches, double threshold);

/// Keeps i -> j iff i is also the nearest neighbour of j among K1.
std::vector<PutativeMatch> mutual_nn_filter(
    const KeypointSet& k1, const KeypointSet& k2,
    const std::vector<PutativeMatch>& matches, int num_threads = 0);

}  // namespace adalam

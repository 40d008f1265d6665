#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adalam {

struct EvalReport {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Match-level precision/recall/F1 of a selected index set against
/// ground-truth labels. Duplicate selected indices count once.
EvalReport match_prf(std::span<const std::size_t> selected,
                     const std::vector<bool>& gt_inlier);

/// Fraction of errors <= threshold (closed comparison).
double map_at(std::span<const double> errors, double threshold);

/// (1/t) * integral_0^t recall(x) dx, in closed form over the sorted errors.
/// Failures are encoded as +infinity.
double exact_auc(std::span<const double> errors, double threshold);

/// Mean of recall at bin_width, 2*bin_width, ..., threshold.
double hist_auc(std::span<const double> errors, double threshold,
                double bin_width = 5.0);

/// key=value lines, one field per line.
std::string format_report(const EvalReport& report);

}  // namespace adalam

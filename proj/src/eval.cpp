#include "adalam/eval.hpp"

#include "adalam/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace adalam {
namespace {

void check_errors(std::span<const double> errors, const char* who) {
  if (errors.empty()) throw InvalidArgument(std::string(who) + ": empty error list");
  for (double e : errors) {
    if (std::isnan(e) || e < 0.0) {
      throw InvalidArgument(std::string(who) + ": errors must be >= 0 or inf");
    }
  }
}

void check_threshold(double t, const char* who) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw InvalidArgument(std::string(who) + ": threshold must be > 0");
  }
}

}  // namespace

EvalReport match_prf(std::span<const std::size_t> selected,
                     const std::vector<bool>& gt_inlier) {
  std::vector<char> picked(gt_inlier.size(), 0);
  for (std::size_t i : selected) {
    if (i >= gt_inlier.size()) {
      throw InvalidArgument("match_prf: selected index " + std::to_string(i) +
                            " out of range");
    }
    picked[i] = 1;
  }
  EvalReport r;
  for (std::size_t i = 0; i < gt_inlier.size(); ++i) {
    if (picked[i] && gt_inlier[i]) ++r.true_positives;
    if (picked[i] && !gt_inlier[i]) ++r.false_positives;
    if (!picked[i] && gt_inlier[i]) ++r.false_negatives;
  }
  const double tp = static_cast<double>(r.true_positives);
  const std::size_t sel = r.true_positives + r.false_positives;
  const std::size_t pos = r.true_positives + r.false_negatives;
  r.precision = sel == 0 ? 0.0 : tp / static_cast<double>(sel);
  r.recall = pos == 0 ? 0.0 : tp / static_cast<double>(pos);
  r.f1 = r.precision + r.recall == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double map_at(std::span<const double> errors, double threshold) {
  check_errors(errors, "map_at");
  check_threshold(threshold, "map_at");
  const auto hits = std::count_if(errors.begin(), errors.end(),
                                  [threshold](double e) { return e <= threshold; });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

double exact_auc(std::span<const double> errors, double threshold) {
  check_errors(errors, "exact_auc");
  check_threshold(threshold, "exact_auc");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  // recall steps up by 1/n at each error; each error e < t contributes
  // (t - e) / (t * n).
  double area = 0.0;
  for (double e : sorted) {
    if (e >= threshold) break;
    area += threshold - e;
  }
  return area / (threshold * static_cast<double>(sorted.size()));
}

double hist_auc(std::span<const double> errors, double threshold, double bin_width) {
  check_errors(errors, "hist_auc");
  check_threshold(threshold, "hist_auc");
  check_threshold(bin_width, "hist_auc");
  const double bins_real = threshold / bin_width;
  const double bins_rounded = std::round(bins_real);
  if (bins_rounded < 1.0 || std::abs(bins_real - bins_rounded) > 1e-9 * bins_real) {
    throw InvalidArgument("hist_auc: threshold must be a positive multiple of bin_width");
  }
  const auto bins = static_cast<long long>(bins_rounded);
  double sum = 0.0;
  for (long long b = 1; b <= bins; ++b) {
    const double edge = b == bins ? threshold : static_cast<double>(b) * bin_width;
    sum += map_at(errors, edge);
  }
  return sum / static_cast<double>(bins);
}

std::string format_report(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "true_positives=%zu\nfalse_positives=%zu\nfalse_negatives=%zu\n"
                "precision=%.9g\nrecall=%.9g\nf1=%.9g\n",
                r.true_positives, r.false_positives, r.false_negatives,
                r.precision, r.recall, r.f1);
  return buf;
}

}  // namespace adalam

#pragma once

#include <string>
#include <vector>

#include "deceptlab/error.hpp"

namespace deceptlab {

// Deceptive is the positive class throughout.
struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long total() const { return tp + fp + fn + tn; }
};

struct MetricsReport {
  double precision = 0, recall = 0, f1 = 0, accuracy = 0, auroc = 0, specificity = 0;
  // Sample standard deviations; populated only by aggregate().
  double precision_std = 0, recall_std = 0, f1_std = 0, accuracy_std = 0, auroc_std = 0,
         specificity_std = 0;
  bool aggregated = false;
  // Set when a zero-denominator ratio was reported as 0.
  bool undefined_ratio = false;

  double metric(std::size_t i) const;
  double std_of(std::size_t i) const;
};

inline constexpr const char* kMetricNames[6] = {"precision", "recall",    "f1",
                                                "accuracy",  "auroc",     "specificity"};

// Predict deceptive iff score >= threshold.
ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold = 0.5);

// precision / recall / f1 / accuracy / specificity; 0/0 ratios become 0 and
// flip the undefined_ratio flag. auroc is left at 0.
MetricsReport point_metrics(const ConfusionCounts& c);

// Mann-Whitney rank formulation, ties counted one half.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);
// Trapezoidal sweep over all thresholds; agrees with auroc() to 1e-12.
double auroc_threshold_sweep(const std::vector<double>& scores, const std::vector<int>& labels);

// Per-metric mean and sample (n-1) standard deviation over CV rows.
MetricsReport aggregate(const std::vector<MetricsReport>& rows);

// "70.61 ± 2.58" style cell, values scaled x100.
std::string format_mean_std(double mean, double std);

std::string metrics_to_csv(const std::vector<MetricsReport>& rows, const MetricsReport& agg);
std::string metrics_to_json(const MetricsReport& agg, std::size_t n_runs);

}  // namespace deceptlab

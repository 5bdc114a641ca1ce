#include "deceptlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "deceptlab/error.hpp"

namespace deceptlab {

namespace {

void check_scored(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ContractError("metrics: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
  for (int l : labels)
    if (l != 0 && l != 1) throw ContractError("metrics: labels must be binary");
}

}  // namespace

double MetricsReport::metric(std::size_t i) const {
  const double v[6] = {precision, recall, f1, accuracy, auroc, specificity};
  return v[i];
}

double MetricsReport::std_of(std::size_t i) const {
  const double v[6] = {precision_std, recall_std, f1_std,
                       accuracy_std,  auroc_std,  specificity_std};
  return v[i];
}

ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold) {
  check_scored(scores, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1)
      (predicted ? c.tp : c.fn)++;
    else
      (predicted ? c.fp : c.tn)++;
  }
  return c;
}

MetricsReport point_metrics(const ConfusionCounts& c) {
  MetricsReport r;
  auto ratio = [&r](double num, double den) {
    if (den == 0.0) {
      r.undefined_ratio = true;
      return 0.0;
    }
    return num / den;
  };
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.specificity = ratio(c.tn, c.tn + c.fp);
  return r;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_scored(scores, labels);
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DomainError("auroc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups; rank sum of positives gives the U statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auroc_threshold_sweep(const std::vector<double>& scores,
                             const std::vector<int>& labels) {
  check_scored(scores, labels);
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DomainError("auroc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Walk thresholds from high to low; tie groups move diagonally, so the
  // trapezoid rule reproduces the half-credit tie convention.
  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double d_tp = 0.0, d_fp = 0.0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1)
        d_tp += 1.0;
      else
        d_fp += 1.0;
      ++j;
    }
    area += d_fp * (tp + 0.5 * d_tp);
    tp += d_tp;
    fp += d_fp;
    i = j;
  }
  return area / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricsReport aggregate(const std::vector<MetricsReport>& rows) {
  if (rows.size() < 2)
    throw DomainError("aggregate: need at least 2 rows for a sample standard deviation");
  const double n = static_cast<double>(rows.size());
  double mean[6] = {0}, sq[6] = {0};
  for (const auto& row : rows)
    for (std::size_t i = 0; i < 6; ++i) mean[i] += row.metric(i);
  for (std::size_t i = 0; i < 6; ++i) mean[i] /= n;
  for (const auto& row : rows)
    for (std::size_t i = 0; i < 6; ++i) {
      const double diff = row.metric(i) - mean[i];
      sq[i] += diff * diff;
    }
  MetricsReport agg;
  agg.aggregated = true;
  agg.precision = mean[0];
  agg.recall = mean[1];
  agg.f1 = mean[2];
  agg.accuracy = mean[3];
  agg.auroc = mean[4];
  agg.specificity = mean[5];
  agg.precision_std = std::sqrt(sq[0] / (n - 1));
  agg.recall_std = std::sqrt(sq[1] / (n - 1));
  agg.f1_std = std::sqrt(sq[2] / (n - 1));
  agg.accuracy_std = std::sqrt(sq[3] / (n - 1));
  agg.auroc_std = std::sqrt(sq[4] / (n - 1));
  agg.specificity_std = std::sqrt(sq[5] / (n - 1));
  for (const auto& row : rows) agg.undefined_ratio = agg.undefined_ratio || row.undefined_ratio;
  return agg;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", mean * 100.0, std * 100.0);
  return buf;
}

std::string metrics_to_csv(const std::vector<MetricsReport>& rows, const MetricsReport& agg) {
  std::ostringstream os;
  os << "row";
  for (const char* name : kMetricNames) os << "," << name;
  os << "\n";
  char buf[32];
  auto emit = [&os, &buf](const std::string& tag, auto value_of) {
    os << tag;
    for (std::size_t i = 0; i < 6; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", value_of(i));
      os << "," << buf;
    }
    os << "\n";
  };
  for (std::size_t r = 0; r < rows.size(); ++r)
    emit("run_" + std::to_string(r), [&](std::size_t i) { return rows[r].metric(i); });
  emit("mean", [&](std::size_t i) { return agg.metric(i); });
  emit("std", [&](std::size_t i) { return agg.std_of(i); });
  return os.str();
}

std::string metrics_to_json(const MetricsReport& agg, std::size_t n_runs) {
  nlohmann::json j;
  j["n_runs"] = n_runs;
  for (std::size_t i = 0; i < 6; ++i) {
    j["mean"][kMetricNames[i]] = agg.metric(i);
    j["std"][kMetricNames[i]] = agg.std_of(i);
    j["table"][kMetricNames[i]] = format_mean_std(agg.metric(i), agg.std_of(i));
  }
  return j.dump(2) + "\n";
}

}  // namespace deceptlab

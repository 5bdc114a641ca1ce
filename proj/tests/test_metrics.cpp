#include <doctest.h>

#include <cmath>

#include "deceptlab/metrics.hpp"
#include "deceptlab/rng.hpp"
#include "oracles.hpp"

using namespace deceptlab;

TEST_CASE("confusion counting and the boundary rule") {
  auto c = confusion({0.9, 0.4}, {1, 0});
  CHECK(c.tp == 1);
  CHECK(c.tn == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);

  // score exactly at the threshold classifies positive
  auto boundary = confusion({0.5}, {1});
  CHECK(boundary.tp == 1);
  CHECK(boundary.fn == 0);

  auto all_pos = confusion({0.2, 0.8, 0.5}, {1, 1, 1});
  CHECK(all_pos.tn == 0);
  CHECK(all_pos.fp == 0);

  CHECK_THROWS_AS(confusion({0.5}, {1, 0}), ContractError);
}

TEST_CASE("point metrics fixtures") {
  MetricsReport r = point_metrics({3, 1, 2, 4});
  CHECK(r.precision == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.recall == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.f1 == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35).epsilon(1e-12));
  CHECK(r.accuracy == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.specificity == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(r.undefined_ratio);

  MetricsReport perfect = point_metrics({5, 0, 0, 5});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.specificity == 1.0);

  MetricsReport degenerate = point_metrics({0, 0, 2, 3});
  CHECK(degenerate.precision == 0.0);
  CHECK(degenerate.undefined_ratio);
}

TEST_CASE("auroc endpoints and tie convention") {
  CHECK(auroc({1, 0, 1, 0}, {1, 0, 1, 0}) == 1.0);
  CHECK(auroc({0.7, 0.7, 0.7}, {1, 0, 1}) == 0.5);
  CHECK_THROWS_AS(auroc({0.1, 0.2}, {1, 1}), DomainError);
}

TEST_CASE("auroc agrees with the O(n^2) pair-counting oracle") {
  Rng rng(2025);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(11);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid forces plenty of ties.
      scores[i] = static_cast<double>(rng.uniform_int(5)) / 4.0;
      labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
      (labels[i] ? pos : neg) = true;
    }
    if (!pos || !neg) {
      labels[0] = 1;
      labels[n - 1] = 0;
    }
    const double expect = oracles::pair_count_auc(scores, labels);
    CHECK(std::abs(auroc(scores, labels) - expect) < 1e-12);
    CHECK(std::abs(auroc_threshold_sweep(scores, labels) - expect) < 1e-12);
  }
}

TEST_CASE("auroc is invariant under strictly monotonic score transforms") {
  Rng rng(77);
  std::vector<double> scores(20);
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform(0, 1);
    labels[i] = rng.uniform01() < 0.4 ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> warped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) warped[i] = std::exp(3.0 * scores[i]) - 2.0;
  CHECK(auroc(scores, labels) == auroc(warped, labels));
}

TEST_CASE("accuracy decomposes into recall and specificity") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.uniform_int(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform(0, 1);
      labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    const auto c = confusion(scores, labels);
    const auto r = point_metrics(c);
    const double n_pos = static_cast<double>(c.tp + c.fn);
    const double n_neg = static_cast<double>(c.tn + c.fp);
    CHECK(std::abs(r.accuracy -
                   (r.recall * n_pos + r.specificity * n_neg) / static_cast<double>(n)) <
          1e-12);
  }
}

TEST_CASE("aggregation over CV rows") {
  MetricsReport a, b;
  a.accuracy = 0.6;
  b.accuracy = 0.8;
  auto agg = aggregate({a, b});
  CHECK(agg.accuracy == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(agg.accuracy_std == doctest::Approx(std::sqrt(0.02)).epsilon(1e-9));
  CHECK(agg.aggregated);

  auto same = aggregate({a, a, a});
  CHECK(same.accuracy_std == 0.0);

  CHECK_THROWS_AS(aggregate({a}), DomainError);
}

TEST_CASE("table formatting matches the reporting style") {
  CHECK(format_mean_std(0.7061, 0.0258) == "70.61 ± 2.58");
}

TEST_CASE("writers carry the exact metric names") {
  MetricsReport a, b;
  a.accuracy = 0.5;
  b.accuracy = 0.9;
  auto agg = aggregate({a, b});
  const auto csv = metrics_to_csv({a, b}, agg);
  const auto json = metrics_to_json(agg, 2);
  for (const char* name : kMetricNames) {
    CHECK(csv.find(name) != std::string::npos);
    CHECK(json.find(name) != std::string::npos);
  }
  CHECK(csv.rfind("row,precision,recall,f1,accuracy,auroc,specificity\n", 0) == 0);
}

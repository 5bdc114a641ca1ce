#include <doctest.h>

#include <cmath>

#include "deceptlab/explain.hpp"

using namespace deceptlab;
using namespace deceptlab::explain;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Samples from a transparent logistic-linear oracle over mask bits.
std::vector<PerturbationSample> oracle_samples(const std::vector<double>& coef, double bias,
                                               std::size_t n_samples, std::uint64_t seed) {
  Rng rng(seed);
  auto masks = perturb(coef.size(), n_samples, rng);
  std::vector<PerturbationSample> samples;
  samples.reserve(masks.size());
  for (auto& mask : masks) {
    PerturbationSample s;
    double z = bias;
    for (std::size_t i = 0; i < coef.size(); ++i) z += coef[i] * (mask[i] ? 1.0 : 0.0);
    s.model_prob = sigmoid(z);
    s.proximity_weight = proximity(mask);
    s.mask = std::move(mask);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<std::string> token_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("tok" + std::to_string(i));
  return names;
}

}  // namespace

TEST_CASE("perturbation masks") {
  Rng rng(1);
  auto only = perturb(4, 1, rng);
  REQUIRE(only.size() == 1);
  CHECK(only[0] == std::vector<std::uint8_t>{1, 1, 1, 1});

  auto many = perturb(6, 200, rng);
  CHECK(many[0] == std::vector<std::uint8_t>(6, 1));
  for (std::size_t i = 1; i < many.size(); ++i) {
    std::size_t dropped = 0;
    for (auto b : many[i]) dropped += b ? 0 : 1;
    CHECK(dropped >= 1);
    CHECK(dropped <= 6);
  }
  CHECK_THROWS_AS(perturb(0, 5, rng), DomainError);

  Rng r1(42), r2(42);
  CHECK(perturb(5, 50, r1) == perturb(5, 50, r2));
}

TEST_CASE("proximity kernel") {
  CHECK(proximity({1, 1, 1, 1}) == 1.0);

  // Strictly decreasing in the number of dropped tokens, enumerated.
  for (std::size_t len = 2; len <= 10; ++len) {
    double prev = 2.0;
    for (std::size_t kept = len; kept-- > 0;) {
      std::vector<std::uint8_t> mask(len, 0);
      for (std::size_t i = 0; i < kept; ++i) mask[i] = 1;
      const double w = proximity(mask);
      CHECK(w < prev);
      CHECK(w > 0.0);
      CHECK(w <= 1.0);
      prev = w;
    }
  }
}

TEST_CASE("surrogate recovers the dominant token of a transparent model") {
  // prob = sigmoid(2 * has(tok2) - 1): tok2 carries all the signal.
  std::vector<double> coef = {0.0, 0.0, 2.0, 0.0, 0.0, 0.0};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto samples = oracle_samples(coef, -1.0, 5000, seed);
    auto e = fit_surrogate(samples, token_names(coef.size()), 3);
    REQUIRE(!e.token_weights.empty());
    if (e.token_weights[0].token == "tok2" && e.token_weights[0].weight > 0) ++hits;
  }
  CHECK(hits >= 19);
}

TEST_CASE("surrogate ranking matches the true coefficient ranking (top 3)") {
  const std::vector<double> magnitudes = {2.0, 1.2, 0.7};
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng placer(seed * 31 + 7);
    std::vector<double> coef(8, 0.0);
    std::vector<std::size_t> slots(coef.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    placer.shuffle(slots);
    for (std::size_t i = 0; i < magnitudes.size(); ++i) coef[slots[i]] = magnitudes[i];

    auto samples = oracle_samples(coef, -0.5, 5000, seed);
    auto e = fit_surrogate(samples, token_names(coef.size()), 3);
    REQUIRE(e.token_weights.size() == 3);
    bool ok = true;
    for (std::size_t i = 0; i < 3; ++i)
      ok = ok && e.token_weights[i].index == slots[i];
    agree += ok ? 1 : 0;
  }
  CHECK(agree >= 19);
}

TEST_CASE("constant model yields near-zero weights and the constant intercept") {
  Rng rng(3);
  auto masks = perturb(5, 2000, rng);
  std::vector<PerturbationSample> samples;
  for (auto& mask : masks) {
    PerturbationSample s;
    s.model_prob = 0.37;
    s.proximity_weight = proximity(mask);
    s.mask = std::move(mask);
    samples.push_back(std::move(s));
  }
  auto e = fit_surrogate(samples, token_names(5), 4);
  for (const auto& tw : e.token_weights) CHECK(std::abs(tw.weight) < 1e-6);
  CHECK(e.intercept == doctest::Approx(0.37).epsilon(1e-9));
}

TEST_CASE("a token the model provably ignores gets |w| < 1e-3") {
  // Model exactly linear in the mask bits; tokens 1, 3 and 4 carry zero
  // coefficient, so the surrogate must assign them (essentially) nothing.
  const std::vector<double> coef = {0.1, 0.0, -0.05, 0.0, 0.0};
  Rng rng(11);
  auto masks = perturb(coef.size(), 5000, rng);
  std::vector<PerturbationSample> samples;
  for (auto& mask : masks) {
    PerturbationSample s;
    double y = 0.3;
    for (std::size_t i = 0; i < coef.size(); ++i) y += coef[i] * (mask[i] ? 1.0 : 0.0);
    s.model_prob = y;
    s.proximity_weight = proximity(mask);
    s.mask = std::move(mask);
    samples.push_back(std::move(s));
  }
  auto e = fit_surrogate(samples, token_names(coef.size()), coef.size());
  for (const auto& tw : e.token_weights)
    if (coef[tw.index] == 0.0) CHECK(std::abs(tw.weight) < 1e-3);
}

TEST_CASE("dead tokens stay far below live ones through a sigmoid") {
  std::vector<double> coef = {1.5, 0.0, -0.8, 0.0, 0.6};
  auto samples = oracle_samples(coef, 0.2, 5000, 11);
  auto e = fit_surrogate(samples, token_names(coef.size()), coef.size());
  double live_min = 1e9, dead_max = 0;
  for (const auto& tw : e.token_weights) {
    if (coef[tw.index] == 0.0)
      dead_max = std::max(dead_max, std::abs(tw.weight));
    else
      live_min = std::min(live_min, std::abs(tw.weight));
  }
  CHECK(dead_max < 0.1 * live_min);
}

TEST_CASE("duplicating a sample at weight w equals one sample at weight 2w") {
  std::vector<double> coef = {1.0, -0.5, 0.3};
  auto base = oracle_samples(coef, 0.0, 60, 5);

  auto doubled = base;
  doubled.push_back(base[7]);  // duplicate

  auto merged = base;
  merged[7].proximity_weight *= 2.0;

  auto e1 = fit_surrogate(doubled, token_names(3), 3);
  auto e2 = fit_surrogate(merged, token_names(3), 3);
  REQUIRE(e1.token_weights.size() == e2.token_weights.size());
  for (std::size_t i = 0; i < e1.token_weights.size(); ++i) {
    CHECK(e1.token_weights[i].index == e2.token_weights[i].index);
    CHECK(std::abs(e1.token_weights[i].weight - e2.token_weights[i].weight) < 1e-10);
  }
  CHECK(std::abs(e1.intercept - e2.intercept) < 1e-10);
}

TEST_CASE("degenerate designs are rejected") {
  std::vector<PerturbationSample> same;
  for (int i = 0; i < 10; ++i) {
    PerturbationSample s;
    s.mask = {1, 0, 1};
    s.model_prob = 0.5;
    s.proximity_weight = 1.0;
    same.push_back(s);
  }
  CHECK_THROWS_AS(fit_surrogate(same, token_names(3), 2), DomainError);
  CHECK_THROWS_AS(fit_surrogate({same[0]}, token_names(3), 2), ContractError);
}

namespace {

ModelConfig pair_config() {
  ModelConfig cfg;
  cfg.architecture = Architecture::coatt;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.base_layers = 0;
  cfg.head_widths = {6};
  cfg.vocab_size = 0;  // set below
  cfg.max_len_q1 = 8;
  cfg.max_len_q2 = 8;
  return cfg;
}

}  // namespace

TEST_CASE("explain_pair on a live model") {
  data::StatementPair pair;
  pair.id = "doc1";
  pair.q1 = "we will visit the lake cabin";
  pair.q2 = "photos from last summer prove it";
  pair.label = 0;

  auto vocab = data::build_vocab({pair.q1, pair.q2, "extra filler words"});
  auto cfg = pair_config();
  cfg.vocab_size = vocab.size();
  auto model = Model::build(cfg, 7);

  ExplainOptions options;
  options.n_samples = 400;
  options.seed = 9;

  auto e = explain_pair(model, vocab, pair, options);
  CHECK(e.predicted_prob >= 0.0);
  CHECK(e.predicted_prob <= 1.0);
  double total = 0;
  for (const auto& tw : e.token_weights) total += std::abs(tw.weight);
  CHECK(total > 0.0);  // untrained but non-constant model

  // Tokens come from both statements, grouped correctly.
  for (const auto& tw : e.token_weights) {
    if (tw.statement == 0)
      CHECK(tw.index < 6);
    else
      CHECK(tw.index >= 6);
  }

  // Reproducibility: identical options give identical JSON.
  auto e2 = explain_pair(model, vocab, pair, options);
  CHECK(explanation_to_json(e, pair, options) == explanation_to_json(e2, pair, options));

  // Target restriction on single-statement architectures.
  ModelConfig dense_cfg = cfg;
  dense_cfg.architecture = Architecture::dense;
  auto dense_model = Model::build(dense_cfg, 7);
  CHECK_THROWS_AS(explain_pair(dense_model, vocab, pair, options), ContractError);
  options.target = Target::q1;
  auto e3 = explain_pair(dense_model, vocab, pair, options);
  for (const auto& tw : e3.token_weights) CHECK(tw.statement == 0);

  // HTML renders every token and tags the classes by color.
  options.target = Target::both;
  const auto html = explanation_to_html(e, pair, options);
  CHECK(html.find("cabin") != std::string::npos);
  CHECK(html.find("255,140,0") != std::string::npos);  // orange = deceptive
  CHECK(html.find("30,100,255") != std::string::npos); // blue = truthful
}

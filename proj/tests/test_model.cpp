#include <doctest.h>

#include <cmath>
#include <set>

#include "deceptlab/gradcheck.hpp"
#include "deceptlab/model.hpp"

using namespace deceptlab;

namespace {

ModelConfig tiny_config(Architecture arch) {
  ModelConfig cfg;
  cfg.architecture = arch;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.base_layers = 1;
  cfg.head_widths = {6, 4};
  cfg.vocab_size = 12;
  cfg.max_len_q1 = 5;
  cfg.max_len_q2 = 4;
  cfg.lexicon_dim = arch == Architecture::coatt_liwc ? 3 : 0;
  return cfg;
}

EncodedStatement statement(std::vector<int> ids) {
  EncodedStatement st;
  st.mask.assign(ids.size(), 1);
  st.ids = std::move(ids);
  return st;
}

const std::vector<Architecture> kAll = {
    Architecture::dense, Architecture::mha,        Architecture::transformer,
    Architecture::coatt, Architecture::coatt_liwc, Architecture::transformer_coatt};

// Captured from a seeded reference run (seed 2024, tiny coatt config).
constexpr double kIdenticalPairFixture = 0.52283961707027649;

}  // namespace

TEST_CASE("probabilities live in [0, 1] for every architecture") {
  auto q1 = statement({2, 5, 7, 1, 0});
  q1.mask[4] = 0;
  auto q2 = statement({3, 3, 9, 0});
  q2.mask[3] = 0;
  std::vector<double> lex = {0.1, 0.5, 0.2};
  for (auto arch : kAll) {
    auto model = Model::build(tiny_config(arch), 99);
    const bool liwc = arch == Architecture::coatt_liwc;
    auto out = model.forward(q1, &q2, liwc ? &lex : nullptr);
    CHECK(out.probability >= 0.0);
    CHECK(out.probability <= 1.0);
    CHECK(model.config().paired() == out.coattention.has_value());
  }
}

TEST_CASE("same seed and config build bit-identical parameters") {
  for (auto arch : {Architecture::coatt, Architecture::transformer}) {
    auto a = Model::build(tiny_config(arch), 1234);
    auto b = Model::build(tiny_config(arch), 1234);
    auto pa = a.named_parameters();
    auto pb = b.named_parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].first == pb[i].first);
      CHECK(pa[i].second->data == pb[i].second->data);
    }
  }
}

TEST_CASE("single-statement architectures ignore Q2 exactly") {
  auto q1 = statement({2, 5, 7, 1, 4});
  auto q2a = statement({3, 3, 9, 2});
  auto q2b = statement({8, 1, 1, 6});
  for (auto arch : {Architecture::dense, Architecture::mha, Architecture::transformer}) {
    auto model = Model::build(tiny_config(arch), 7);
    CHECK(model.forward(q1, &q2a).probability == model.forward(q1, &q2b).probability);
  }
}

TEST_CASE("paired architectures react to Q2") {
  auto q1 = statement({2, 5, 7, 1, 4});
  auto q2a = statement({3, 3, 9, 2});
  auto q2b = statement({8, 1, 1, 6});
  std::vector<double> lex = {0.1, 0.5, 0.2};
  for (auto arch :
       {Architecture::coatt, Architecture::coatt_liwc, Architecture::transformer_coatt}) {
    auto model = Model::build(tiny_config(arch), 8);
    const bool liwc = arch == Architecture::coatt_liwc;
    CHECK(model.forward(q1, &q2a, liwc ? &lex : nullptr).probability !=
          model.forward(q1, &q2b, liwc ? &lex : nullptr).probability);
  }
}

TEST_CASE("siamese branches share one encoder parameter object") {
  auto model = Model::build(tiny_config(Architecture::coatt), 21);
  // No parameter group appears twice, and there is exactly one embedding.
  std::set<const LayerParams*> seen;
  std::size_t embeddings = 0;
  for (const auto& g : model.parameters()) {
    CHECK(seen.insert(g.get()).second);
    if (g->name == "embedding") ++embeddings;
  }
  CHECK(embeddings == 1);

  // Total parameter count decomposes into encoder + coattention + head.
  auto count = [](const std::vector<LayerParamsPtr>& groups) {
    std::size_t n = 0;
    for (const auto& g : groups)
      for (const auto& [k, t] : g->weights) n += t->size();
    return n;
  };
  std::size_t total = count(model.parameters());
  std::size_t encoder = count(model.encoder_parameters());
  std::size_t coatt = 0;
  for (const auto& [k, t] : model.coattention_params()->layer->weights) coatt += t->size();
  CHECK(total > encoder + coatt);
  const std::size_t head = total - encoder - coatt;
  // Head: dense stack 16 -> 6 -> 4 -> 1 with biases.
  CHECK(head == 16 * 6 + 6 + 6 * 4 + 4 + 4 * 1 + 1);
}

TEST_CASE("coatt_liwc with a zero lexicon equals zeroed lexicon weights") {
  auto cfg = tiny_config(Architecture::coatt_liwc);
  auto q1 = statement({2, 5, 7, 1, 4});
  auto q2 = statement({3, 3, 9, 2});

  auto model = Model::build(cfg, 31);
  std::vector<double> zeros(3, 0.0);
  const double with_zero_lex = model.forward(q1, &q2, &zeros).probability;

  // Zero the weight rows that multiply the lexicon slice of the concat.
  auto zeroed = Model::build(cfg, 31);
  for (const auto& g : zeroed.parameters()) {
    if (g->name != "liwc_mid") continue;
    auto& w = g->at("w");
    for (std::size_t r = 128; r < w->rows(); ++r)
      for (std::size_t c = 0; c < w->cols(); ++c) w->at(r, c) = 0.0;
  }
  std::vector<double> lex = {0.4, -0.7, 1.2};
  CHECK(zeroed.forward(q1, &q2, &lex).probability == with_zero_lex);
}

TEST_CASE("missing required inputs are contract errors") {
  auto q1 = statement({2, 5, 7});
  auto model = Model::build(tiny_config(Architecture::coatt), 3);
  CHECK_THROWS_AS(model.forward(q1), ContractError);

  auto liwc = Model::build(tiny_config(Architecture::coatt_liwc), 3);
  auto q2 = statement({3, 3});
  CHECK_THROWS_AS(liwc.forward(q1, &q2, nullptr), ContractError);
}

TEST_CASE("config validation") {
  auto cfg = tiny_config(Architecture::coatt);
  cfg.d = 9;  // not divisible by heads=2
  CHECK_THROWS_AS(Model::build(cfg, 1), ConfigError);

  auto cfg2 = tiny_config(Architecture::dense);
  cfg2.head_widths.clear();
  CHECK_THROWS_AS(Model::build(cfg2, 1), ConfigError);

  auto cfg3 = tiny_config(Architecture::coatt_liwc);
  cfg3.lexicon_dim = 0;
  CHECK_THROWS_AS(Model::build(cfg3, 1), ConfigError);
}

TEST_CASE("end-to-end gradient check per architecture") {
  auto q1 = statement({2, 5, 7, 1});
  auto q2 = statement({3, 9, 4});
  std::vector<double> lex = {0.2, -0.4, 0.9};
  for (auto arch : kAll) {
    CAPTURE(to_string(arch));
    auto cfg = tiny_config(arch);
    cfg.max_len_q1 = 4;
    cfg.max_len_q2 = 3;
    auto model = Model::build(cfg, 17);
    const bool liwc = arch == Architecture::coatt_liwc;
    auto loss = [&]() {
      auto g = model.forward_graph(q1, model.config().paired() ? &q2 : nullptr,
                                   liwc ? &lex : nullptr);
      return ops::bce_loss(g.prob, 1, 1.0);
    };
    std::vector<TensorPtr> leaves;
    for (const auto& group : model.parameters())
      for (const auto& [k, t] : group->weights) leaves.push_back(t);
    CHECK(max_rel_grad_error(loss, leaves) < 1e-3);
  }
}

TEST_CASE("embedded-input forward path") {
  auto cfg = tiny_config(Architecture::coatt);
  auto model = Model::build(cfg, 5);
  Rng rng(6);
  auto c = Tensor::zeros(8, 6);
  auto s = Tensor::zeros(8, 4);
  for (double& v : c->data) v = rng.uniform(-1, 1);
  for (double& v : s->data) v = rng.uniform(-1, 1);
  auto out = model.forward_embedded(c, s);
  CHECK(out.probability >= 0.0);
  CHECK(out.probability <= 1.0);
  CHECK(out.coattention->affinity->rows() == 6);
  CHECK(out.coattention->affinity->cols() == 4);

  auto wrong = Tensor::zeros(7, 6);
  CHECK_THROWS_AS(model.forward_embedded(wrong, s), ConfigError);
}

TEST_CASE("identical statements give the seeded reference output") {
  // Regression fixture captured from a seeded run of this configuration.
  auto cfg = tiny_config(Architecture::coatt);
  auto model = Model::build(cfg, 2024);
  auto q = statement({2, 5, 7, 1, 4});
  auto q2 = q;
  auto out = model.forward(q, &q2);
  CHECK(std::isfinite(out.probability));
  // With identical token sequences both branches produce one encoding
  // matrix, so the attended vectors are weighted sums of the same columns.
  const auto& co = *out.coattention;
  CHECK(co.affinity->rows() == co.affinity->cols());
  // Frozen expected value; see test comment above.
  CHECK(out.probability == doctest::Approx(kIdenticalPairFixture).epsilon(1e-12));
}

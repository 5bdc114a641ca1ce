#include <doctest.h>

#include <cmath>

#include "deceptlab/coattention.hpp"

using namespace deceptlab;

namespace {

TensorPtr randomized(std::size_t r, std::size_t c, Rng& rng, bool grad = false) {
  auto t = Tensor::zeros(r, c, grad);
  for (double& v : t->data) v = rng.uniform(-1, 1);
  return t;
}

double sum_of(const TensorPtr& t) {
  double s = 0;
  for (double v : t->data) s += v;
  return s;
}

}  // namespace

TEST_CASE("paper-scale shapes: d=768, N=12, T=20") {
  Rng rng(1);
  auto params = CoAttentionParams::init(768, 768, rng);
  auto c = randomized(768, 12, rng);
  auto s = randomized(768, 20, rng);
  ops::Mask mc(12, 1), ms(20, 1);
  auto out = coattend(c, s, params, mc, ms);
  CHECK(out.affinity->rows() == 12);
  CHECK(out.affinity->cols() == 20);
  CHECK(out.z->rows() == 1);
  CHECK(out.z->cols() == 1536);
  CHECK(out.a_s->cols() == 20);
  CHECK(out.a_c->cols() == 12);
  // At this width the pre-tanh products reach tens of sigmas, where f64
  // tanh rounds to exactly +-1; the open-interval property is checked at a
  // non-saturating scale below.
  for (double v : out.affinity->data) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK(std::abs(sum_of(out.a_s) - 1.0) < 1e-9);
  CHECK(std::abs(sum_of(out.a_c) - 1.0) < 1e-9);
}

TEST_CASE("affinity entries stay inside the open interval (-1, 1)") {
  Rng rng(10);
  auto params = CoAttentionParams::init(12, 12, rng);
  auto c = randomized(12, 5, rng);
  auto s = randomized(12, 6, rng);
  ops::Mask mc(5, 1), ms(6, 1);
  auto out = coattend(c, s, params, mc, ms);
  for (double v : out.affinity->data) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("zero affinity weights give a zero affinity matrix") {
  Rng rng(2);
  auto params = CoAttentionParams::init(6, 4, rng);
  for (double& v : params.layer->at("w_l")->data) v = 0.0;
  auto c = randomized(6, 3, rng);
  auto s = randomized(6, 5, rng);
  ops::Mask mc(3, 1), ms(5, 1);
  auto out = coattend(c, s, params, mc, ms);
  for (double v : out.affinity->data) CHECK(v == 0.0);
}

TEST_CASE("single-token statements attend with weight one") {
  Rng rng(3);
  auto params = CoAttentionParams::init(5, 3, rng);
  auto c = randomized(5, 1, rng);
  auto s = randomized(5, 1, rng);
  ops::Mask one(1, 1);
  auto out = coattend(c, s, params, one, one);
  CHECK(out.a_s->data == std::vector<double>{1.0});
  CHECK(out.a_c->data == std::vector<double>{1.0});
  for (std::size_t r = 0; r < 5; ++r) {
    CHECK(out.s_hat->data[r] == s->data[r]);
    CHECK(out.c_hat->data[r] == c->data[r]);
  }
}

TEST_CASE("z is exactly the concatenation of the attended vectors") {
  Rng rng(4);
  auto params = CoAttentionParams::init(7, 7, rng);
  auto c = randomized(7, 4, rng);
  auto s = randomized(7, 6, rng);
  ops::Mask mc(4, 1), ms(6, 1);
  auto out = coattend(c, s, params, mc, ms);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(out.z->data[i] == out.s_hat->data[i]);
    CHECK(out.z->data[7 + i] == out.c_hat->data[i]);
  }
}

TEST_CASE("attention sums to one over unmasked positions") {
  Rng rng(5);
  auto params = CoAttentionParams::init(8, 8, rng);
  auto c = randomized(8, 5, rng);
  auto s = randomized(8, 7, rng);
  ops::Mask mc = {1, 1, 0, 1, 0};
  ops::Mask ms = {1, 0, 1, 1, 0, 1, 1};
  auto out = coattend(c, s, params, mc, ms);
  CHECK(std::abs(sum_of(out.a_s) - 1.0) < 1e-9);
  CHECK(std::abs(sum_of(out.a_c) - 1.0) < 1e-9);
  for (std::size_t j = 0; j < ms.size(); ++j)
    if (!ms[j]) CHECK(out.a_s->data[j] == 0.0);
  for (std::size_t j = 0; j < mc.size(); ++j)
    if (!mc[j]) CHECK(out.a_c->data[j] == 0.0);
}

TEST_CASE("pad columns cannot leak into the attended vectors") {
  Rng rng(6);
  auto params = CoAttentionParams::init(6, 6, rng);
  auto c = randomized(6, 4, rng);
  auto s_clean = randomized(6, 5, rng);
  auto s_dirty = Tensor::from(6, 5, s_clean->data);
  ops::Mask mc(4, 1);
  ops::Mask ms = {1, 1, 1, 0, 0};
  for (std::size_t r = 0; r < 6; ++r) {
    s_dirty->at(r, 3) = 1e6;  // garbage in pad columns
    s_dirty->at(r, 4) = -1e6;
  }
  auto clean = coattend(c, s_clean, params, mc, ms);
  auto dirty = coattend(c, s_dirty, params, mc, ms);
  CHECK(clean.z->data == dirty.z->data);
}

TEST_CASE("permutation equivariance of the second statement") {
  Rng rng(7);
  auto params = CoAttentionParams::init(9, 5, rng);
  auto c = randomized(9, 4, rng);
  auto s = randomized(9, 6, rng);
  ops::Mask mc(4, 1);
  ops::Mask ms = {1, 1, 1, 1, 1, 0};

  const std::size_t perm[6] = {4, 2, 0, 5, 1, 3};
  auto s_perm = Tensor::zeros(9, 6);
  ops::Mask ms_perm(6);
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t r = 0; r < 9; ++r) s_perm->at(r, j) = s->at(r, perm[j]);
    ms_perm[j] = ms[perm[j]];
  }

  auto base = coattend(c, s, params, mc, ms);
  auto permuted = coattend(c, s_perm, params, mc, ms_perm);
  for (std::size_t j = 0; j < 6; ++j)
    CHECK(permuted.a_s->data[j] == doctest::Approx(base.a_s->data[perm[j]]).epsilon(1e-12));
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(std::abs(permuted.s_hat->data[i] - base.s_hat->data[i]) < 1e-12);
    CHECK(std::abs(permuted.c_hat->data[i] - base.c_hat->data[i]) < 1e-12);
  }
}

TEST_CASE("swapping statement roles swaps the halves of z") {
  Rng rng(8);
  const std::size_t d = 6, k = 4;
  auto params = CoAttentionParams::init(d, k, rng);
  auto c = randomized(d, 3, rng);
  auto s = randomized(d, 5, rng);
  ops::Mask mc(3, 1), ms(5, 1);

  CoAttentionParams swapped;
  swapped.d = d;
  swapped.k = k;
  swapped.layer = std::make_shared<LayerParams>();
  swapped.layer->name = "swapped";
  auto wl_t = Tensor::zeros(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) wl_t->at(i, j) = params.layer->at("w_l")->at(j, i);
  swapped.layer->weights["w_l"] = wl_t;
  swapped.layer->weights["w_s"] = params.layer->at("w_c");
  swapped.layer->weights["w_c"] = params.layer->at("w_s");
  swapped.layer->weights["w_hs"] = params.layer->at("w_hc");
  swapped.layer->weights["w_hc"] = params.layer->at("w_hs");

  auto base = coattend(c, s, params, mc, ms);
  auto flipped = coattend(s, c, swapped, ms, mc);
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(flipped.s_hat->data[i] == doctest::Approx(base.c_hat->data[i]).epsilon(1e-12));
    CHECK(flipped.c_hat->data[i] == doctest::Approx(base.s_hat->data[i]).epsilon(1e-12));
  }
}

TEST_CASE("coattend gradcheck: accuracy, determinism, step annealing") {
  CHECK(coattend_gradcheck(8, 3, 4, 5, 1) < 1e-4);
  CHECK(coattend_gradcheck(8, 3, 4, 5, 1) == coattend_gradcheck(8, 3, 4, 5, 1));

  const double e3 = coattend_gradcheck(8, 3, 4, 5, 7, 1e-3);
  const double e4 = coattend_gradcheck(8, 3, 4, 5, 7, 1e-4);
  const double e5 = coattend_gradcheck(8, 3, 4, 5, 7, 1e-5);
  CHECK(e4 < e3);
  CHECK(e5 < e4);
  CHECK(e5 < 1e-6);  // truncation error hits the round-off floor
}

TEST_CASE("error contracts") {
  Rng rng(9);
  auto params = CoAttentionParams::init(6, 4, rng);
  auto c = randomized(6, 3, rng);
  auto s = randomized(5, 4, rng);
  ops::Mask mc(3, 1), ms(4, 1);
  CHECK_THROWS_AS(coattend(c, s, params, mc, ms), ShapeError);

  auto s_ok = randomized(6, 4, rng);
  ops::Mask all_pad(4, 0);
  CHECK_THROWS_AS(coattend(c, s_ok, params, mc, all_pad), DomainError);
}

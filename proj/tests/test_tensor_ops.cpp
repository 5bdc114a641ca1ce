#include <doctest.h>

#include <cmath>

#include "deceptlab/gradcheck.hpp"
#include "deceptlab/ops.hpp"
#include "deceptlab/rng.hpp"

using namespace deceptlab;
using ops::Activation;

namespace {

TensorPtr random_tensor(std::size_t r, std::size_t c, Rng& rng, bool grad = true) {
  auto t = Tensor::zeros(r, c, grad);
  for (double& v : t->data) v = rng.uniform(-1.5, 1.5);
  return t;
}

}  // namespace

TEST_CASE("matmul fixtures") {
  auto a = Tensor::from(2, 2, {1, 2, 3, 4});
  auto b = Tensor::from(2, 1, {1, 1});
  auto c = ops::matmul(a, b);
  CHECK(c->data == std::vector<double>{3, 7});

  auto eye = Tensor::from(2, 2, {1, 0, 0, 1});
  Rng rng(5);
  auto x = random_tensor(2, 7, rng, false);
  CHECK(ops::matmul(eye, x)->data == x->data);
}

TEST_CASE("matmul shape error names both shapes") {
  auto a = Tensor::zeros(2, 3);
  auto b = Tensor::zeros(4, 2);
  CHECK_THROWS_WITH_AS(ops::matmul(a, b),
                       doctest::Contains("(2x3)"), ShapeError);
}

TEST_CASE("matmul gradient matches central finite differences") {
  Rng rng(42);
  auto a = random_tensor(4, 3, rng);
  auto b = random_tensor(3, 5, rng);
  // loss = sum of all entries of a*b
  auto left = Tensor::zeros(1, 4);
  auto right = Tensor::zeros(5, 1);
  for (double& v : left->data) v = 1.0;
  for (double& v : right->data) v = 1.0;
  auto loss_builder = [&]() { return ops::matmul(ops::matmul(left, ops::matmul(a, b)), right); };
  CHECK(max_rel_grad_error(loss_builder, {a, b}) < 1e-4);
}

TEST_CASE("elementwise fixtures and gradients") {
  auto x = Tensor::from(1, 3, {0.0, 0.0, -3.0});
  CHECK(ops::elementwise(Activation::tanh, x)->data[0] == 0.0);
  CHECK(ops::elementwise(Activation::sigmoid, x)->data[1] == 0.5);
  CHECK(ops::elementwise(Activation::relu, x)->data[2] == 0.0);

  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    // |x| <= 15: the widest band where f64 can still represent tanh(x) < 1.
    const double v = rng.uniform(-15, 15);
    auto t = ops::elementwise(Activation::tanh, Tensor::scalar(v));
    CHECK(t->data[0] > -1.0);
    CHECK(t->data[0] < 1.0);
  }

  for (Activation act : {Activation::tanh, Activation::sigmoid, Activation::relu}) {
    auto input = random_tensor(3, 4, rng);
    auto ones_l = Tensor::from(1, 3, {1, 1, 1});
    auto ones_r = Tensor::from(4, 1, {1, 1, 1, 1});
    auto loss = [&]() {
      return ops::matmul(ops::matmul(ones_l, ops::elementwise(act, input)), ones_r);
    };
    CHECK(max_rel_grad_error(loss, {input}) < 1e-4);
  }
}

TEST_CASE("softmax contracts") {
  auto two = ops::softmax(Tensor::from(1, 2, {0, 0}));
  CHECK(two->data[0] == doctest::Approx(0.5).epsilon(1e-12));

  auto one = ops::softmax(Tensor::from(1, 1, {123.456}));
  CHECK(one->data[0] == 1.0);

  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(8);
    auto x = random_tensor(1, n, rng, false);
    for (double& v : x->data) v *= 50;
    auto y = ops::softmax(x);
    double sum = 0;
    for (double v : y->data) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);

    const double shift = rng.uniform(-100, 100);
    auto xs = Tensor::zeros(1, n);
    for (std::size_t i = 0; i < n; ++i) xs->data[i] = x->data[i] + shift;
    auto ys = ops::softmax(xs);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y->data[i] - ys->data[i]) < 1e-9);
  }

  CHECK_THROWS_AS(ops::softmax(Tensor::zeros(2, 2)), ShapeError);
  CHECK_THROWS_AS(ops::softmax(Tensor::create({1, 0})), ShapeError);
}

TEST_CASE("row_softmax gradient and masking") {
  Rng rng(33);
  auto x = random_tensor(2, 5, rng);
  ops::Mask mask = {1, 0, 1, 1, 0};
  auto y = ops::row_softmax(x, &mask);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(y->at(r, 1) == 0.0);
    CHECK(y->at(r, 4) == 0.0);
    CHECK(y->at(r, 0) + y->at(r, 2) + y->at(r, 3) == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto coeff_l = random_tensor(1, 2, rng, false);
  auto coeff_r = random_tensor(5, 1, rng, false);
  auto loss = [&]() {
    return ops::matmul(ops::matmul(coeff_l, ops::row_softmax(x, &mask)), coeff_r);
  };
  CHECK(max_rel_grad_error(loss, {x}) < 1e-4);
}

TEST_CASE("mean_pool fixtures, mask correctness and gradient") {
  auto x = Tensor::from(2, 2, {1, 3, 2, 4});
  ops::Mask all = {1, 1};
  CHECK(ops::mean_pool(x, all)->data == std::vector<double>{2, 3});

  ops::Mask second = {0, 1};
  CHECK(ops::mean_pool(x, second)->data == std::vector<double>{3, 4});

  // Appending masked pad columns must not change the mean.
  auto padded = Tensor::from(2, 4, {1, 3, 99, -7, 2, 4, 55, 11});
  ops::Mask pm = {1, 1, 0, 0};
  CHECK(ops::mean_pool(padded, pm)->data == ops::mean_pool(x, all)->data);

  ops::Mask none = {0, 0};
  CHECK_THROWS_AS(ops::mean_pool(x, none), DomainError);

  Rng rng(55);
  auto input = random_tensor(3, 4, rng);
  ops::Mask mask = {1, 0, 1, 1};
  auto coeff = random_tensor(3, 1, rng, false);
  auto loss = [&]() { return ops::matmul(ops::mean_pool(input, mask), coeff); };
  CHECK(max_rel_grad_error(loss, {input}) < 1e-4);
}

TEST_CASE("structural ops carry exact gradients") {
  Rng rng(77);
  auto a = random_tensor(3, 2, rng);
  auto b = random_tensor(3, 4, rng);
  auto bias = random_tensor(3, 1, rng);
  auto attn = random_tensor(1, 4, rng);
  auto gamma = random_tensor(3, 1, rng);
  auto beta = random_tensor(3, 1, rng);
  auto coeff = random_tensor(1, 3, rng, false);
  auto colv = random_tensor(6, 1, rng, false);

  SUBCASE("hconcat + slice_rows + transpose") {
    auto c2 = random_tensor(1, 2, rng, false);
    auto loss = [&]() {
      auto joined = ops::hconcat(a, b);                                  // 3 x 6
      auto sliced = ops::transpose(ops::transpose(ops::slice_rows(joined, 1, 3)));
      return ops::matmul(ops::matmul(c2, sliced), colv);
    };
    CHECK(max_rel_grad_error(loss, {a, b}) < 1e-4);
  }

  SUBCASE("zero_cols + attend") {
    ops::Mask mask = {1, 0, 1, 1};
    auto loss = [&]() {
      auto z = ops::zero_cols(b, mask);
      auto pooled = ops::attend(z, ops::row_softmax(attn, &mask));  // 1 x 3
      return ops::matmul(pooled, ops::transpose(coeff));
    };
    CHECK(max_rel_grad_error(loss, {b, attn}) < 1e-4);
  }

  SUBCASE("add_col + scale + layer_norm_cols") {
    auto loss = [&]() {
      auto shifted = ops::add_col(ops::scale(b, 1.7), bias);
      auto normed = ops::layer_norm_cols(shifted, gamma, beta);
      return ops::matmul(ops::matmul(coeff, normed), ops::slice_rows(colv, 0, 4));
    };
    CHECK(max_rel_grad_error(loss, {b, bias, gamma, beta}) < 1e-4);
  }

  SUBCASE("vconcat") {
    auto loss = [&]() {
      auto stacked = ops::vconcat({a, ops::slice_rows(a, 0, 2)});  // 5 x 2
      auto c5 = Tensor::from(1, 5, {1, -1, 2, 0.5, 1});
      auto c1 = Tensor::from(2, 1, {1, 1});
      return ops::matmul(ops::matmul(c5, stacked), c1);
    };
    CHECK(max_rel_grad_error(loss, {a}) < 1e-4);
  }
}

TEST_CASE("layer norm normalizes each column before the affine map") {
  Rng rng(88);
  auto x = random_tensor(16, 5, rng, false);
  // var(out) = var(x)/(var(x) + eps); keep var(x) >> eps so the normalized
  // variance sits within 1e-6 of one.
  for (double& v : x->data) v *= 10.0;
  auto gamma = Tensor::zeros(16, 1);
  auto beta = Tensor::zeros(16, 1);
  for (double& v : gamma->data) v = 1.0;
  auto y = ops::layer_norm_cols(x, gamma, beta);
  for (std::size_t j = 0; j < 5; ++j) {
    double mean = 0, var = 0;
    for (std::size_t r = 0; r < 16; ++r) mean += y->at(r, j);
    mean /= 16;
    for (std::size_t r = 0; r < 16; ++r) var += (y->at(r, j) - mean) * (y->at(r, j) - mean);
    var /= 16;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("bce loss fixtures") {
  auto half = Tensor::scalar(0.5);
  CHECK(ops::bce_loss(half, 1, 1.0)->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ops::bce_loss(half, 0, 1.0)->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  auto confident = Tensor::scalar(0.9999999);
  CHECK(ops::bce_loss(confident, 1, 1.0)->data[0] < 1e-6);

  auto p = Tensor::scalar(0.3);
  CHECK(ops::bce_loss(p, 1, 2.0)->data[0] ==
        doctest::Approx(2.0 * ops::bce_loss(p, 1, 1.0)->data[0]).epsilon(1e-12));

  // gradient through the loss
  Rng rng(4);
  auto prob = Tensor::scalar(0.42);
  prob->requires_grad = true;
  auto loss = [&]() { return ops::bce_loss(prob, 1, 1.3); };
  CHECK(max_rel_grad_error(loss, {prob}) < 1e-4);
}

TEST_CASE("mean_scalars averages and distributes gradient") {
  auto a = Tensor::scalar(1.0);
  auto b = Tensor::scalar(3.0);
  a->requires_grad = b->requires_grad = true;
  auto m = ops::mean_scalars({a, b});
  CHECK(m->data[0] == 2.0);
  backward(m);
  CHECK(a->grad[0] == 0.5);
  CHECK(b->grad[0] == 0.5);
}

TEST_CASE("forward passes are deterministic") {
  auto build = []() {
    Rng rng(123);
    auto a = Tensor::zeros(4, 4, true);
    auto b = Tensor::zeros(4, 4, true);
    for (double& v : a->data) v = rng.uniform(-1, 1);
    for (double& v : b->data) v = rng.uniform(-1, 1);
    return ops::elementwise(Activation::tanh, ops::matmul(a, b))->data;
  };
  CHECK(build() == build());
}

TEST_CASE("no-grad guard suppresses graph construction") {
  auto a = Tensor::zeros(2, 2, true);
  NoGradGuard guard;
  auto out = ops::matmul(a, a);
  CHECK_FALSE(out->requires_grad);
  CHECK(out->parents.empty());
}

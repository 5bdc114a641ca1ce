#include "deceptlab/coattention.hpp"

#include <algorithm>

#include "deceptlab/gradcheck.hpp"

namespace deceptlab {

CoAttentionParams CoAttentionParams::init(std::size_t d, std::size_t k, Rng& rng,
                                          const std::string& name) {
  CoAttentionParams p;
  p.d = d;
  p.k = k;
  p.layer = std::make_shared<LayerParams>();
  p.layer->name = name;
  p.layer->weights["w_l"] = glorot_uniform(d, d, rng);
  p.layer->weights["w_s"] = glorot_uniform(k, d, rng);
  p.layer->weights["w_c"] = glorot_uniform(k, d, rng);
  p.layer->weights["w_hs"] = glorot_uniform(k, 1, rng);
  p.layer->weights["w_hc"] = glorot_uniform(k, 1, rng);
  return p;
}

CoAttentionOutput coattend(const TensorPtr& c, const TensorPtr& s,
                           const CoAttentionParams& params, const ops::Mask& mask_c,
                           const ops::Mask& mask_s) {
  if (c->rows() != s->rows() || c->rows() != params.d)
    throw ShapeError("coattend: hidden sizes disagree, C " + shape_str(*c) + ", S " +
                     shape_str(*s) + ", d=" + std::to_string(params.d));
  const auto active = [](const ops::Mask& m) {
    return std::any_of(m.begin(), m.end(), [](auto v) { return v != 0; });
  };
  if (!active(mask_c) || !active(mask_s))
    throw DomainError("coattend: a statement consists only of padding");

  const auto& w_l = params.layer->at("w_l");
  const auto& w_s = params.layer->at("w_s");
  const auto& w_c = params.layer->at("w_c");
  const auto& w_hs = params.layer->at("w_hs");
  const auto& w_hc = params.layer->at("w_hc");

  auto c0 = ops::zero_cols(c, mask_c);
  auto s0 = ops::zero_cols(s, mask_s);

  auto affinity =
      ops::elementwise(ops::Activation::tanh, ops::matmul(ops::matmul(ops::transpose(c0), w_l), s0));
  auto ws_s = ops::matmul(w_s, s0);  // k x T
  auto wc_c = ops::matmul(w_c, c0);  // k x N
  auto h_s = ops::elementwise(ops::Activation::tanh,
                              ops::add(ws_s, ops::matmul(wc_c, affinity)));
  auto h_c = ops::elementwise(ops::Activation::tanh,
                              ops::add(wc_c, ops::matmul(ws_s, ops::transpose(affinity))));

  CoAttentionOutput out;
  out.affinity = affinity;
  out.a_s = ops::row_softmax(ops::matmul(ops::transpose(w_hs), h_s), &mask_s);
  out.a_c = ops::row_softmax(ops::matmul(ops::transpose(w_hc), h_c), &mask_c);
  out.s_hat = ops::attend(s0, out.a_s);
  out.c_hat = ops::attend(c0, out.a_c);
  out.z = ops::hconcat(out.s_hat, out.c_hat);
  return out;
}

double coattend_gradcheck(std::size_t d, std::size_t n, std::size_t t, std::size_t k,
                          std::uint64_t seed, double step) {
  Rng rng(seed);
  auto params = CoAttentionParams::init(d, k, rng);
  auto c = Tensor::zeros(d, n, /*requires_grad=*/true);
  auto s = Tensor::zeros(d, t, /*requires_grad=*/true);
  for (double& v : c->data) v = rng.uniform(-1.0, 1.0);
  for (double& v : s->data) v = rng.uniform(-1.0, 1.0);
  ops::Mask mask_c(n, 1), mask_s(t, 1);

  // Contract z against fixed random coefficients so the whole Jacobian is
  // exercised by one scalar loss.
  auto coeff = Tensor::zeros(2 * d, 1);
  for (double& v : coeff->data) v = rng.uniform(-1.0, 1.0);

  std::vector<TensorPtr> leaves = {c, s};
  for (auto& [key, tensor] : params.layer->weights) leaves.push_back(tensor);

  auto loss_builder = [&]() {
    auto out = coattend(c, s, params, mask_c, mask_s);
    return ops::matmul(out.z, coeff);
  };
  return max_rel_grad_error(loss_builder, leaves, step);
}

}  // namespace deceptlab

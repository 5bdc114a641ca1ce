#include "deceptlab/layers.hpp"

#include <cmath>

namespace deceptlab {

TensorPtr& LayerParams::at(const std::string& key) {
  auto it = weights.find(key);
  if (it == weights.end())
    throw ContractError("layer " + name + " has no parameter '" + key + "'");
  return it->second;
}

const TensorPtr& LayerParams::at(const std::string& key) const {
  auto it = weights.find(key);
  if (it == weights.end())
    throw ContractError("layer " + name + " has no parameter '" + key + "'");
  return it->second;
}

TensorPtr glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  auto t = Tensor::zeros(rows, cols, /*requires_grad=*/true);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : t->data) v = rng.uniform(-limit, limit);
  return t;
}

namespace layers {

using ops::Activation;
using ops::Mask;

LayerParamsPtr dense_init(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  auto p = std::make_shared<LayerParams>();
  p->name = name;
  p->weights["w"] = glorot_uniform(in, out, rng);
  p->weights["b"] = Tensor::zeros(1, out, /*requires_grad=*/true);
  return p;
}

TensorPtr dense(const TensorPtr& x, const LayerParams& params, Activation act) {
  const auto& w = params.at("w");
  if (x->rows() != 1 || x->cols() != w->rows())
    throw ShapeError("dense " + params.name + ": input " + shape_str(*x) +
                     " does not match weights " + shape_str(*w));
  return ops::elementwise(act, ops::add(ops::matmul(x, w), params.at("b")));
}

LayerParamsPtr attention_init(const std::string& name, std::size_t d, Rng& rng) {
  auto p = std::make_shared<LayerParams>();
  p->name = name;
  for (const char* key : {"wq", "wk", "wv", "wo"}) p->weights[key] = glorot_uniform(d, d, rng);
  for (const char* key : {"bq", "bk", "bv", "bo"})
    p->weights[key] = Tensor::zeros(d, 1, /*requires_grad=*/true);
  return p;
}

TensorPtr multi_head_attention(const TensorPtr& x, const LayerParams& params,
                               std::size_t heads, const Mask* mask) {
  const std::size_t d = x->rows();
  if (heads == 0 || d % heads != 0)
    throw ConfigError("multi_head_attention " + params.name + ": hidden size " +
                      std::to_string(d) + " not divisible by " + std::to_string(heads) +
                      " heads");
  const std::size_t dh = d / heads;
  auto q = ops::add_col(ops::matmul(params.at("wq"), x), params.at("bq"));
  auto k = ops::add_col(ops::matmul(params.at("wk"), x), params.at("bk"));
  auto v = ops::add_col(ops::matmul(params.at("wv"), x), params.at("bv"));
  std::vector<TensorPtr> head_outputs;
  head_outputs.reserve(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t h = 0; h < heads; ++h) {
    auto qh = ops::slice_rows(q, h * dh, (h + 1) * dh);
    auto kh = ops::slice_rows(k, h * dh, (h + 1) * dh);
    auto vh = ops::slice_rows(v, h * dh, (h + 1) * dh);
    auto scores = ops::scale(ops::matmul(ops::transpose(qh), kh), scale);  // N x N
    auto attn = ops::row_softmax(scores, mask);
    head_outputs.push_back(ops::matmul(vh, ops::transpose(attn)));
  }
  auto merged = heads == 1 ? head_outputs[0] : ops::vconcat(head_outputs);
  return ops::add_col(ops::matmul(params.at("wo"), merged), params.at("bo"));
}

LayerParamsPtr encoder_block_init(const std::string& name, std::size_t d, Rng& rng) {
  auto p = attention_init(name, d, rng);
  p->weights["ln1_g"] = Tensor::zeros(d, 1, true);
  p->weights["ln1_b"] = Tensor::zeros(d, 1, true);
  p->weights["ln2_g"] = Tensor::zeros(d, 1, true);
  p->weights["ln2_b"] = Tensor::zeros(d, 1, true);
  for (const char* key : {"ln1_g", "ln2_g"})
    for (double& v : p->weights[key]->data) v = 1.0;
  p->weights["ffn_w1"] = glorot_uniform(4 * d, d, rng);
  p->weights["ffn_b1"] = Tensor::zeros(4 * d, 1, true);
  p->weights["ffn_w2"] = glorot_uniform(d, 4 * d, rng);
  p->weights["ffn_b2"] = Tensor::zeros(d, 1, true);
  return p;
}

TensorPtr encoder_block(const TensorPtr& x, const LayerParams& params, std::size_t heads,
                        const Mask* mask) {
  auto attended = multi_head_attention(x, params, heads, mask);
  auto x1 = ops::layer_norm_cols(ops::add(x, attended), params.at("ln1_g"), params.at("ln1_b"));
  auto hidden = ops::elementwise(
      Activation::relu, ops::add_col(ops::matmul(params.at("ffn_w1"), x1), params.at("ffn_b1")));
  auto ff = ops::add_col(ops::matmul(params.at("ffn_w2"), hidden), params.at("ffn_b2"));
  return ops::layer_norm_cols(ops::add(x1, ff), params.at("ln2_g"), params.at("ln2_b"));
}

TensorPtr transformer_encoder(const TensorPtr& x, const std::vector<LayerParamsPtr>& blocks,
                              std::size_t heads, const Mask* mask) {
  auto out = x;
  for (const auto& block : blocks) out = encoder_block(out, *block, heads, mask);
  return out;
}

LayerParamsPtr embedding_init(const std::string& name, std::size_t vocab, std::size_t d,
                              Rng& rng) {
  auto p = std::make_shared<LayerParams>();
  p->name = name;
  p->weights["table"] = glorot_uniform(vocab, d, rng);
  return p;
}

TensorPtr positional_encoding(std::size_t d, std::size_t n) {
  auto pe = Tensor::zeros(d, n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t r = 0; r < d; ++r) {
      const double exponent = static_cast<double>(2 * (r / 2)) / static_cast<double>(d);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe->data[r * n + pos] = (r % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

TensorPtr embed_tokens(const LayerParams& params, const std::vector<int>& ids) {
  auto x = ops::embedding_cols(params.at("table"), ids);
  return ops::add(x, positional_encoding(x->rows(), x->cols()));
}

}  // namespace layers
}  // namespace deceptlab

#include "deceptlab/model.hpp"

#include <algorithm>

namespace deceptlab {

Architecture architecture_from_string(const std::string& name) {
  if (name == "dense") return Architecture::dense;
  if (name == "mha") return Architecture::mha;
  if (name == "transformer") return Architecture::transformer;
  if (name == "coatt") return Architecture::coatt;
  if (name == "coatt_liwc") return Architecture::coatt_liwc;
  if (name == "transformer_coatt") return Architecture::transformer_coatt;
  throw ConfigError("unknown architecture: " + name);
}

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::dense: return "dense";
    case Architecture::mha: return "mha";
    case Architecture::transformer: return "transformer";
    case Architecture::coatt: return "coatt";
    case Architecture::coatt_liwc: return "coatt_liwc";
    case Architecture::transformer_coatt: return "transformer_coatt";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (d <= 0) throw ConfigError("model config: d must be positive");
  if (heads <= 0 || d % heads != 0)
    throw ConfigError("model config: d=" + std::to_string(d) + " not divisible by heads=" +
                      std::to_string(heads));
  if (head_widths.empty()) throw ConfigError("model config: head_widths must be non-empty");
  for (int w : head_widths)
    if (w <= 0) throw ConfigError("model config: head widths must be positive");
  if (vocab_size < 2)
    throw ConfigError("model config: vocab_size must be at least 2 (pad + unknown)");
  if (max_len_q1 <= 0 || max_len_q2 <= 0)
    throw ConfigError("model config: max lengths must be positive");
  if (encoder_layers < 0 || base_layers < 0)
    throw ConfigError("model config: layer counts must be non-negative");
  if (architecture == Architecture::coatt_liwc && lexicon_dim <= 0)
    throw ConfigError("model config: coatt_liwc requires lexicon_dim > 0");
  if (architecture != Architecture::coatt_liwc && lexicon_dim != 0)
    throw ConfigError("model config: lexicon_dim is only valid for coatt_liwc");
  if (k < 0) throw ConfigError("model config: k must be non-negative");
}

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config_ = config;
  Rng rng(seed);
  const auto d = static_cast<std::size_t>(config.d);

  m.embedding_ = layers::embedding_init("embedding", config.vocab_size, d, rng);
  for (int i = 0; i < config.base_layers; ++i)
    m.base_blocks_.push_back(
        layers::encoder_block_init("base_block_" + std::to_string(i), d, rng));

  switch (config.architecture) {
    case Architecture::dense:
      break;
    case Architecture::mha:
      m.mha_head_ = layers::attention_init("mha_head", d, rng);
      break;
    case Architecture::transformer:
      for (int i = 0; i < config.encoder_layers; ++i)
        m.head_blocks_.push_back(
            layers::encoder_block_init("head_block_" + std::to_string(i), d, rng));
      break;
    case Architecture::transformer_coatt:
      for (int i = 0; i < config.encoder_layers; ++i)
        m.branch1_blocks_.push_back(
            layers::encoder_block_init("branch1_block_" + std::to_string(i), d, rng));
      for (int i = 0; i < config.encoder_layers; ++i)
        m.branch2_blocks_.push_back(
            layers::encoder_block_init("branch2_block_" + std::to_string(i), d, rng));
      break;
    case Architecture::coatt:
    case Architecture::coatt_liwc:
      break;
  }
  if (config.paired())
    m.coattention_ = CoAttentionParams::init(d, config.resolved_k(), rng);

  if (config.architecture == Architecture::coatt_liwc) {
    // z -> dense(128) -> concat(lexicon) -> dense(64) -> dense(1, sigmoid)
    m.liwc_pre_ = layers::dense_init("liwc_pre", 2 * d, 128, rng);
    m.liwc_mid_ = layers::dense_init("liwc_mid", 128 + config.lexicon_dim, 64, rng);
    m.liwc_out_ = layers::dense_init("liwc_out", 64, 1, rng);
  } else {
    std::size_t width = config.paired() ? 2 * d : d;
    for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
      const auto out = static_cast<std::size_t>(config.head_widths[i]);
      m.dense_stack_.push_back(
          layers::dense_init("dense_" + std::to_string(i), width, out, rng));
      width = out;
    }
    m.dense_stack_.push_back(layers::dense_init("dense_out", width, 1, rng));
  }
  return m;
}

namespace {

// An all-pad statement still has to produce the model's baseline output
// (the explainer feeds fully dropped statements); represent it by the pad
// token at position 0.
ops::Mask effective_mask(const ops::Mask& mask) {
  if (std::any_of(mask.begin(), mask.end(), [](auto v) { return v != 0; })) return mask;
  ops::Mask fixed = mask;
  if (!fixed.empty()) fixed[0] = 1;
  return fixed;
}

}  // namespace

TensorPtr Model::encode(const EncodedStatement& st) const {
  if (st.ids.empty() || st.ids.size() != st.mask.size())
    throw ContractError("model: statement ids and mask must be non-empty and equal length");
  auto x = layers::embed_tokens(*embedding_, st.ids);
  ops::Mask mask = effective_mask(st.mask);
  return layers::transformer_encoder(x, base_blocks_, config_.heads, &mask);
}

TensorPtr Model::dense_head(const TensorPtr& x) const {
  auto h = x;
  for (std::size_t i = 0; i + 1 < dense_stack_.size(); ++i)
    h = layers::dense(h, *dense_stack_[i], ops::Activation::relu);
  return layers::dense(h, *dense_stack_.back(), ops::Activation::sigmoid);
}

Model::Graph Model::headless_forward(const TensorPtr& c, const ops::Mask& mask_c,
                                     const TensorPtr& s, const ops::Mask& mask_s,
                                     const std::vector<double>* lexicon) const {
  Graph g;
  const auto heads = static_cast<std::size_t>(config_.heads);
  switch (config_.architecture) {
    case Architecture::dense: {
      g.prob = dense_head(ops::mean_pool(c, mask_c));
      return g;
    }
    case Architecture::mha: {
      auto x = layers::multi_head_attention(c, *mha_head_, heads, &mask_c);
      g.prob = dense_head(ops::mean_pool(x, mask_c));
      return g;
    }
    case Architecture::transformer: {
      auto x = layers::transformer_encoder(c, head_blocks_, heads, &mask_c);
      g.prob = dense_head(ops::mean_pool(x, mask_c));
      return g;
    }
    case Architecture::coatt: {
      auto co = coattend(c, s, *coattention_, mask_c, mask_s);
      g.prob = dense_head(co.z);
      g.coattention = std::move(co);
      return g;
    }
    case Architecture::coatt_liwc: {
      if (!lexicon || lexicon->size() != static_cast<std::size_t>(config_.lexicon_dim))
        throw ContractError("coatt_liwc requires a lexicon feature vector of length " +
                            std::to_string(config_.lexicon_dim));
      auto co = coattend(c, s, *coattention_, mask_c, mask_s);
      auto t = layers::dense(co.z, *liwc_pre_, ops::Activation::relu);
      auto lex = Tensor::from(1, lexicon->size(), *lexicon);
      auto merged = ops::hconcat(t, lex);
      auto u = layers::dense(merged, *liwc_mid_, ops::Activation::relu);
      g.prob = layers::dense(u, *liwc_out_, ops::Activation::sigmoid);
      g.coattention = std::move(co);
      return g;
    }
    case Architecture::transformer_coatt: {
      auto c2 = layers::transformer_encoder(c, branch1_blocks_, heads, &mask_c);
      auto s2 = layers::transformer_encoder(s, branch2_blocks_, heads, &mask_s);
      auto co = coattend(c2, s2, *coattention_, mask_c, mask_s);
      g.prob = dense_head(co.z);
      g.coattention = std::move(co);
      return g;
    }
  }
  throw ContractError("model: unreachable architecture");
}

Model::Graph Model::forward_graph(const EncodedStatement& q1, const EncodedStatement* q2,
                                  const std::vector<double>* lexicon) const {
  auto c = encode(q1);
  ops::Mask mask_c = effective_mask(q1.mask);
  TensorPtr s;
  ops::Mask mask_s;
  if (config_.paired()) {
    if (!q2) throw ContractError(to_string(config_.architecture) + " requires both statements");
    s = encode(*q2);
    mask_s = effective_mask(q2->mask);
  }
  return headless_forward(c, mask_c, s, mask_s, lexicon);
}

Model::Graph Model::forward_embedded_graph(const TensorPtr& c, const TensorPtr& s,
                                           const std::vector<double>* lexicon) const {
  if (!c || c->rows() != static_cast<std::size_t>(config_.d))
    throw ConfigError("embedded forward: matrix hidden size does not match configured d=" +
                      std::to_string(config_.d));
  ops::Mask mask_c(c->cols(), 1);
  ops::Mask mask_s;
  if (config_.paired()) {
    if (!s) throw ContractError(to_string(config_.architecture) + " requires both statements");
    if (s->rows() != static_cast<std::size_t>(config_.d))
      throw ConfigError("embedded forward: matrix hidden size does not match configured d=" +
                        std::to_string(config_.d));
    mask_s.assign(s->cols(), 1);
  }
  return headless_forward(c, mask_c, s, mask_s, lexicon);
}

ModelOutput Model::forward(const EncodedStatement& q1, const EncodedStatement* q2,
                           const std::vector<double>* lexicon) const {
  NoGradGuard guard;
  auto g = forward_graph(q1, q2, lexicon);
  return ModelOutput{g.prob->data[0], std::move(g.coattention)};
}

ModelOutput Model::forward_embedded(const TensorPtr& c, const TensorPtr& s,
                                    const std::vector<double>* lexicon) const {
  NoGradGuard guard;
  auto g = forward_embedded_graph(c, s, lexicon);
  return ModelOutput{g.prob->data[0], std::move(g.coattention)};
}

std::vector<LayerParamsPtr> Model::parameters() const {
  std::vector<LayerParamsPtr> out;
  out.push_back(embedding_);
  for (const auto& b : base_blocks_) out.push_back(b);
  for (const auto& b : branch1_blocks_) out.push_back(b);
  for (const auto& b : branch2_blocks_) out.push_back(b);
  if (mha_head_) out.push_back(mha_head_);
  for (const auto& b : head_blocks_) out.push_back(b);
  if (coattention_) out.push_back(coattention_->layer);
  for (const auto& l : dense_stack_) out.push_back(l);
  for (const auto& l : {liwc_pre_, liwc_mid_, liwc_out_})
    if (l) out.push_back(l);
  return out;
}

std::vector<LayerParamsPtr> Model::encoder_parameters() const {
  std::vector<LayerParamsPtr> out;
  out.push_back(embedding_);
  for (const auto& b : base_blocks_) out.push_back(b);
  return out;
}

void Model::set_encoder_frozen(bool frozen) {
  for (auto& group : encoder_parameters()) group->frozen = frozen;
}

std::vector<std::pair<std::string, TensorPtr>> Model::named_parameters() const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  for (const auto& group : parameters())
    for (const auto& [key, tensor] : group->weights)
      out.emplace_back(group->name + "." + key, tensor);
  return out;
}

}  // namespace deceptlab

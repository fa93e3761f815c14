#include "vernet/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace vernet {

void EncoderConfig::validate() const {
  if (dim < 1 || layers < 0 || heads < 1 || ff_dim < 1 || max_positions < 4 || vocab_size < 5)
    throw ContractError("encoder config: dimensions out of range");
  if (dim % heads != 0) throw ContractError("encoder config: dim must be divisible by heads");
}

static Tensor trainable_randn(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t = Tensor::randn(std::move(shape), stddev, rng);
  t.set_trainable(true);
  return t;
}

static Tensor trainable_zeros(std::vector<int> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  t.set_trainable(true);
  return t;
}

static Tensor trainable_ones(std::vector<int> shape) {
  Tensor t = Tensor::full(std::move(shape), 1.0);
  t.set_trainable(true);
  return t;
}

EncoderParams EncoderParams::init(const EncoderConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int d = config.dim;
  EncoderParams p;
  p.token_emb = trainable_randn({config.vocab_size, d}, config.init_stddev, rng);
  p.position_emb = trainable_randn({config.max_positions, d}, config.init_stddev, rng);
  p.segment_emb = trainable_randn({2, d}, config.init_stddev, rng);
  for (int l = 0; l < config.layers; ++l) {
    EncoderLayerParams layer;
    layer.wq = trainable_randn({d, d}, config.init_stddev, rng);
    layer.bq = trainable_zeros({d});
    layer.wk = trainable_randn({d, d}, config.init_stddev, rng);
    layer.bk = trainable_zeros({d});
    layer.wv = trainable_randn({d, d}, config.init_stddev, rng);
    layer.bv = trainable_zeros({d});
    layer.wo = trainable_randn({d, d}, config.init_stddev, rng);
    layer.bo = trainable_zeros({d});
    layer.ln1_gain = trainable_ones({d});
    layer.ln1_bias = trainable_zeros({d});
    layer.ff_w1 = trainable_randn({d, config.ff_dim}, config.init_stddev, rng);
    layer.ff_b1 = trainable_zeros({config.ff_dim});
    layer.ff_w2 = trainable_randn({config.ff_dim, d}, config.init_stddev, rng);
    layer.ff_b2 = trainable_zeros({d});
    layer.ln2_gain = trainable_ones({d});
    layer.ln2_bias = trainable_zeros({d});
    p.layers.push_back(std::move(layer));
  }
  return p;
}

std::vector<NamedTensor> EncoderParams::parameters() {
  std::vector<NamedTensor> out;
  out.emplace_back("encoder.token_emb", token_emb);
  out.emplace_back("encoder.position_emb", position_emb);
  out.emplace_back("encoder.segment_emb", segment_emb);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string base = "encoder.layer" + std::to_string(l) + ".";
    EncoderLayerParams& lay = layers[l];
    out.emplace_back(base + "wq", lay.wq);
    out.emplace_back(base + "bq", lay.bq);
    out.emplace_back(base + "wk", lay.wk);
    out.emplace_back(base + "bk", lay.bk);
    out.emplace_back(base + "wv", lay.wv);
    out.emplace_back(base + "bv", lay.bv);
    out.emplace_back(base + "wo", lay.wo);
    out.emplace_back(base + "bo", lay.bo);
    out.emplace_back(base + "ln1_gain", lay.ln1_gain);
    out.emplace_back(base + "ln1_bias", lay.ln1_bias);
    out.emplace_back(base + "ff_w1", lay.ff_w1);
    out.emplace_back(base + "ff_b1", lay.ff_b1);
    out.emplace_back(base + "ff_w2", lay.ff_w2);
    out.emplace_back(base + "ff_b2", lay.ff_b2);
    out.emplace_back(base + "ln2_gain", lay.ln2_gain);
    out.emplace_back(base + "ln2_bias", lay.ln2_bias);
  }
  return out;
}

static Tensor self_attention(Tape& tape, const Tensor& x, const EncoderLayerParams& layer,
                             const EncoderConfig& config) {
  const int d = config.dim;
  const int head_dim = d / config.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Tensor q = affine(tape, x, layer.wq, layer.bq);
  Tensor k = affine(tape, x, layer.wk, layer.bk);
  Tensor v = affine(tape, x, layer.wv, layer.bv);
  std::vector<Tensor> contexts;
  contexts.reserve(static_cast<std::size_t>(config.heads));
  for (int h = 0; h < config.heads; ++h) {
    const int c0 = h * head_dim, c1 = (h + 1) * head_dim;
    Tensor qh = slice_cols(tape, q, c0, c1);
    Tensor kh = slice_cols(tape, k, c0, c1);
    Tensor vh = slice_cols(tape, v, c0, c1);
    Tensor scores = mul_scalar(tape, matmul_nt(tape, qh, kh), scale);
    Tensor weights = softmax(tape, scores, 1);
    contexts.push_back(matmul(tape, weights, vh));
  }
  Tensor ctx = concat(tape, contexts, 1);
  return affine(tape, ctx, layer.wo, layer.bo);
}

EncodedNode encode_node(Tape& tape, const PairLayout& layout, EncoderParams& params,
                        const EncoderConfig& config) {
  const int len = layout.length();
  if (len > config.max_positions)
    throw ContractError("encode_node: layout longer than max positions");
  for (int id : layout.ids)
    if (id < 0 || id >= config.vocab_size) throw ContractError("encode_node: id outside vocab");

  std::vector<int> positions(static_cast<std::size_t>(len));
  std::vector<int> segments(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    positions[static_cast<std::size_t>(i)] = i;
    segments[static_cast<std::size_t>(i)] = (i <= layout.source_sep_index()) ? 0 : 1;
  }

  Tensor h = add(tape, embed_rows(tape, params.token_emb, layout.ids),
                 embed_rows(tape, params.position_emb, positions));
  h = add(tape, h, embed_rows(tape, params.segment_emb, segments));

  for (const EncoderLayerParams& layer : params.layers) {
    Tensor attn = self_attention(tape, h, layer, config);
    h = layer_norm(tape, add(tape, h, attn), layer.ln1_gain, layer.ln1_bias, config.ln_eps);
    Tensor ff = affine(tape, gelu(tape, affine(tape, h, layer.ff_w1, layer.ff_b1)), layer.ff_w2,
                       layer.ff_b2);
    h = layer_norm(tape, add(tape, h, ff), layer.ln2_gain, layer.ln2_bias, config.ln_eps);
  }

  EncodedNode node;
  node.h = h;
  node.layout = layout;
  node.valid_mask.assign(static_cast<std::size_t>(len), 1);
  return node;
}

std::vector<EncodedNode> encode_group(Tape& tape, const HypothesisGroup& group,
                                      const Vocabulary& vocab, EncoderParams& params,
                                      const EncoderConfig& config, int max_tokens) {
  if (group.hypotheses.empty()) throw ContractError("encode_group: empty group");
  std::vector<EncodedNode> nodes;
  nodes.reserve(group.hypotheses.size());
  for (const Hypothesis& hyp : group.hypotheses) {
    PairLayout layout = encode_pair(group.source, hyp.tokens, vocab, max_tokens);
    nodes.push_back(encode_node(tape, layout, params, config));
  }
  return nodes;
}

}  // namespace vernet

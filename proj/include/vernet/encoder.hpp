#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vernet/tensor.hpp"
#include "vernet/textpipe.hpp"

namespace vernet {

struct EncoderConfig {
  int dim = 64;
  int layers = 2;
  int heads = 4;
  int ff_dim = 256;
  int max_positions = 128;
  int vocab_size = 0;
  double ln_eps = 1e-5;
  double init_stddev = 0.02;
  std::uint64_t seed = 1;

  void validate() const;
};

using NamedTensor = std::pair<std::string, Tensor>;

struct EncoderLayerParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln1_gain, ln1_bias;
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  Tensor ln2_gain, ln2_bias;
};

// Token + learned position + segment embeddings followed by a small
// post-norm transformer stack. Weights draw from normal(0, init_stddev),
// biases start at zero, layer-norm gains at one.
struct EncoderParams {
  Tensor token_emb;     // vocab_size x dim
  Tensor position_emb;  // max_positions x dim
  Tensor segment_emb;   // 2 x dim
  std::vector<EncoderLayerParams> layers;

  static EncoderParams init(const EncoderConfig& config);
  std::vector<NamedTensor> parameters();
};

// Contextual representation of one <source, hypothesis> node.
// H has one row per layout position; valid_mask is 1 for every row since
// nodes are encoded at their exact length (no padding).
struct EncodedNode {
  Tensor h;  // (m+n+3) x dim
  PairLayout layout;
  std::vector<std::uint8_t> valid_mask;
};

EncodedNode encode_node(Tape& tape, const PairLayout& layout, EncoderParams& params,
                        const EncoderConfig& config);

// All K nodes of a group, order preserved. Throws on an empty group.
std::vector<EncodedNode> encode_group(Tape& tape, const HypothesisGroup& group,
                                      const Vocabulary& vocab, EncoderParams& params,
                                      const EncoderConfig& config, int max_tokens = 120);

}  // namespace vernet

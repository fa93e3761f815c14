#pragma once

#include <cstdint>
#include <vector>

#include "vernet/encoder.hpp"
#include "vernet/tensor.hpp"

namespace vernet {

// Bilinear and affine parameters of the verification head plus the three
// baseline scoring heads. Interaction and selection bilinears are kept
// separate parameters.
struct HeadParams {
  Tensor w_interaction;  // d x d
  Tensor w_selection;    // d x d
  Tensor sel_w, sel_b;   // 3d -> 1
  Tensor cls_w, cls_b;   // 3d -> 2
  Tensor ged_w, ged_b;   // d -> 2
  Tensor gqe_w, gqe_b;   // d -> 2
  Tensor qe_w, qe_b;     // d -> 1

  static HeadParams init(int dim, double stddev, std::uint64_t seed);
  std::vector<NamedTensor> parameters();
};

// Cross-node evidence for node k read from node l (Eqs. 2-3): for every
// position p of node k, attention over node l's positions 1..m+n_l+2
// ([CLS] excluded) weighted by (H^k_p)^T W H^l_q, then the weighted sum of
// node l's rows. Result has one row per position of node k. When alpha_out
// is given it receives the attention rows (each sums to 1).
Tensor node_interaction(Tape& tape, const EncodedNode& node_k, const EncodedNode& node_l,
                        const Tensor& w_interaction, Tensor* alpha_out = nullptr);

// Per-node attention-over-attention internals, exposed for inspection.
struct NodeSelectionDetail {
  std::vector<Tensor> beta_source;      // per node, length m+1
  std::vector<Tensor> beta_hypothesis;  // per node, length n_l+1
};

// Attention-over-attention node confidences (Eqs. 4-8): per node, an
// interaction matrix between source side (tokens + source [SEP]) and
// hypothesis side (tokens + final [SEP]) yields beta attention over both
// sides, pooled representations, one logit, and gamma = softmax over nodes.
Tensor node_selection_scores(Tape& tape, const std::vector<EncodedNode>& nodes,
                             const Tensor& w_selection, const Tensor& sel_w, const Tensor& sel_b,
                             NodeSelectionDetail* detail = nullptr);

// V^k = sum_l gamma_l * V^{l->k} (Eq. 9).
Tensor verification_reps(Tape& tape, const std::vector<Tensor>& fine, const Tensor& gamma);

// Pre-softmax class logits for every position of node k (input to Eq. 10).
Tensor token_logits(Tape& tape, const Tensor& h_k, const Tensor& v_k, const Tensor& cls_w,
                    const Tensor& cls_b);

// P(y | w^k_p) rows (Eq. 10); row p sums to 1.
Tensor token_quality(Tape& tape, const Tensor& h_k, const Tensor& v_k, const Tensor& cls_w,
                     const Tensor& cls_b);

// f(s, c^k): mean P(y=1) over the hypothesis tokens and the final [SEP]
// (Eq. 11).
Tensor sentence_score(Tape& tape, const Tensor& probs, const PairLayout& layout);

// Appendix baselines.
struct GedBaselineOutput {
  Tensor token_probs;     // rows sum to 1
  Tensor sentence_score;  // mean P(y=1) over the hypothesis range
};
GedBaselineOutput ged_baseline(Tape& tape, const EncodedNode& node, const Tensor& ged_w,
                               const Tensor& ged_b);
Tensor ged_logits(Tape& tape, const Tensor& h, const Tensor& ged_w, const Tensor& ged_b);

// P(y_s = 1) from the [CLS] row.
Tensor gqe_score(Tape& tape, const EncodedNode& node, const Tensor& gqe_w, const Tensor& gqe_b);
// sigmoid regression head approximating the hypothesis F0.5.
Tensor qe_score(Tape& tape, const EncodedNode& node, const Tensor& qe_w, const Tensor& qe_b);

// Full head pass over one group's encoded nodes.
struct GroupScores {
  Tensor gamma;                      // K
  std::vector<Tensor> logits;        // per node: (m+n_k+3) x 2, pre-softmax
  std::vector<Tensor> token_probs;   // per node: (m+n_k+3) x 2
  std::vector<Tensor> sentence;      // per node: scalar f
};
GroupScores score_group(Tape& tape, const std::vector<EncodedNode>& nodes, HeadParams& head);

}  // namespace vernet

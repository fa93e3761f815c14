#include "vernet/head.hpp"

namespace vernet {

HeadParams HeadParams::init(int dim, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  HeadParams p;
  auto weight = [&](std::vector<int> shape) {
    Tensor t = Tensor::randn(std::move(shape), stddev, rng);
    t.set_trainable(true);
    return t;
  };
  auto bias = [&](int n) {
    Tensor t = Tensor::zeros({n});
    t.set_trainable(true);
    return t;
  };
  p.w_interaction = weight({dim, dim});
  p.w_selection = weight({dim, dim});
  p.sel_w = weight({3 * dim, 1});
  p.sel_b = bias(1);
  p.cls_w = weight({3 * dim, 2});
  p.cls_b = bias(2);
  p.ged_w = weight({dim, 2});
  p.ged_b = bias(2);
  p.gqe_w = weight({dim, 2});
  p.gqe_b = bias(2);
  p.qe_w = weight({dim, 1});
  p.qe_b = bias(1);
  return p;
}

std::vector<NamedTensor> HeadParams::parameters() {
  return {
      {"head.w_interaction", w_interaction},
      {"head.w_selection", w_selection},
      {"head.sel_w", sel_w},
      {"head.sel_b", sel_b},
      {"head.cls_w", cls_w},
      {"head.cls_b", cls_b},
      {"head.ged_w", ged_w},
      {"head.ged_b", ged_b},
      {"head.gqe_w", gqe_w},
      {"head.gqe_b", gqe_b},
      {"head.qe_w", qe_w},
      {"head.qe_b", qe_b},
  };
}

Tensor node_interaction(Tape& tape, const EncodedNode& node_k, const EncodedNode& node_l,
                        const Tensor& w_interaction, Tensor* alpha_out) {
  if (node_k.h.cols() != node_l.h.cols() || node_k.h.cols() != w_interaction.rows())
    throw ContractError("node_interaction: dimension mismatch");
  // evidence rows of node l: positions 1..m+n_l+2, [CLS] excluded
  Tensor evidence = slice_rows(tape, node_l.h, 1, node_l.h.rows());
  Tensor projected = matmul(tape, node_k.h, w_interaction);
  Tensor alpha = softmax(tape, matmul_nt(tape, projected, evidence), 1);
  if (alpha_out) *alpha_out = alpha;
  return matmul(tape, alpha, evidence);
}

Tensor node_selection_scores(Tape& tape, const std::vector<EncodedNode>& nodes,
                             const Tensor& w_selection, const Tensor& sel_w, const Tensor& sel_b,
                             NodeSelectionDetail* detail) {
  if (nodes.empty()) throw ContractError("node_selection_scores: empty graph");
  std::vector<Tensor> logits;
  logits.reserve(nodes.size());
  for (const EncodedNode& node : nodes) {
    const int m = node.layout.m, n = node.layout.n;
    // source side: tokens + source [SEP]; hypothesis side: tokens + final [SEP]
    Tensor src = slice_rows(tape, node.h, 1, m + 2);
    Tensor hyp = slice_rows(tape, node.h, m + 2, m + n + 3);
    Tensor interaction = matmul_nt(tape, matmul(tape, src, w_selection), hyp);
    Tensor beta_src = mean(tape, softmax(tape, interaction, 0), 1);   // over source positions
    Tensor beta_hyp = mean(tape, softmax(tape, interaction, 1), 0);   // over hypothesis positions
    Tensor h_src = row_matmul(tape, beta_src, src);
    Tensor h_hyp = row_matmul(tape, beta_hyp, hyp);
    Tensor features =
        concat(tape, {mul(tape, h_src, h_hyp), h_src, h_hyp}, 0);
    logits.push_back(affine(tape, features, sel_w, sel_b));
    if (detail) {
      detail->beta_source.push_back(beta_src);
      detail->beta_hypothesis.push_back(beta_hyp);
    }
  }
  return softmax(tape, concat(tape, logits, 0), 0);
}

Tensor verification_reps(Tape& tape, const std::vector<Tensor>& fine, const Tensor& gamma) {
  if (fine.empty()) throw ContractError("verification_reps: no fine-grained inputs");
  if (static_cast<int>(fine.size()) != gamma.size())
    throw ContractError("verification_reps: gamma length must equal node count");
  for (const Tensor& v : fine)
    if (v.shape() != fine[0].shape())
      throw ContractError("verification_reps: row counts disagree");
  Tensor acc = scale_by_element(tape, fine[0], gamma, 0);
  for (std::size_t l = 1; l < fine.size(); ++l)
    acc = add(tape, acc, scale_by_element(tape, fine[l], gamma, static_cast<int>(l)));
  return acc;
}

Tensor token_logits(Tape& tape, const Tensor& h_k, const Tensor& v_k, const Tensor& cls_w,
                    const Tensor& cls_b) {
  if (h_k.shape() != v_k.shape()) throw ContractError("token_logits: H and V shapes disagree");
  Tensor features = concat(tape, {mul(tape, h_k, v_k), h_k, v_k}, 1);
  return affine(tape, features, cls_w, cls_b);
}

Tensor token_quality(Tape& tape, const Tensor& h_k, const Tensor& v_k, const Tensor& cls_w,
                     const Tensor& cls_b) {
  return softmax(tape, token_logits(tape, h_k, v_k, cls_w, cls_b), 1);
}

Tensor sentence_score(Tape& tape, const Tensor& probs, const PairLayout& layout) {
  Tensor hyp_rows = slice_rows(tape, probs, layout.hypothesis_index(0), layout.length());
  return mean_all(tape, slice_cols(tape, hyp_rows, 1, 2));
}

Tensor ged_logits(Tape& tape, const Tensor& h, const Tensor& ged_w, const Tensor& ged_b) {
  return affine(tape, h, ged_w, ged_b);
}

GedBaselineOutput ged_baseline(Tape& tape, const EncodedNode& node, const Tensor& ged_w,
                               const Tensor& ged_b) {
  GedBaselineOutput out;
  out.token_probs = softmax(tape, ged_logits(tape, node.h, ged_w, ged_b), 1);
  out.sentence_score = sentence_score(tape, out.token_probs, node.layout);
  return out;
}

Tensor gqe_score(Tape& tape, const EncodedNode& node, const Tensor& gqe_w, const Tensor& gqe_b) {
  Tensor cls = slice_rows(tape, node.h, 0, 1);
  Tensor probs = softmax(tape, affine(tape, cls, gqe_w, gqe_b), 1);
  return mean_all(tape, slice_cols(tape, probs, 1, 2));
}

Tensor qe_score(Tape& tape, const EncodedNode& node, const Tensor& qe_w, const Tensor& qe_b) {
  Tensor cls = slice_rows(tape, node.h, 0, 1);
  return mean_all(tape, sigmoid(tape, affine(tape, cls, qe_w, qe_b)));
}

GroupScores score_group(Tape& tape, const std::vector<EncodedNode>& nodes, HeadParams& head) {
  if (nodes.empty()) throw ContractError("score_group: empty group");
  const int k_count = static_cast<int>(nodes.size());
  GroupScores out;
  out.gamma = node_selection_scores(tape, nodes, head.w_selection, head.sel_w, head.sel_b);
  out.logits.reserve(static_cast<std::size_t>(k_count));
  out.token_probs.reserve(static_cast<std::size_t>(k_count));
  out.sentence.reserve(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    std::vector<Tensor> fine;
    fine.reserve(static_cast<std::size_t>(k_count));
    for (int l = 0; l < k_count; ++l)
      fine.push_back(node_interaction(tape, nodes[static_cast<std::size_t>(k)],
                                      nodes[static_cast<std::size_t>(l)], head.w_interaction));
    Tensor v_k = verification_reps(tape, fine, out.gamma);
    Tensor logits =
        token_logits(tape, nodes[static_cast<std::size_t>(k)].h, v_k, head.cls_w, head.cls_b);
    Tensor probs = softmax(tape, logits, 1);
    out.logits.push_back(logits);
    out.token_probs.push_back(probs);
    out.sentence.push_back(
        sentence_score(tape, probs, nodes[static_cast<std::size_t>(k)].layout));
  }
  return out;
}

}  // namespace vernet

#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_helpers.hpp"
#include "vernet/head.hpp"

using namespace vernet;
using vernet::testing::random_tensor;

namespace {

// hand-built node with random contents; no encoder involved
EncodedNode fake_node(int m, int n, int dim, Rng& rng, double scale = 1.0) {
  EncodedNode node;
  node.layout.m = m;
  node.layout.n = n;
  node.layout.ids.assign(static_cast<std::size_t>(m + n + 3), 0);
  node.h = random_tensor({m + n + 3, dim}, rng, scale);
  node.valid_mask.assign(static_cast<std::size_t>(m + n + 3), 1);
  return node;
}

// Explicit-loop evaluation of the interaction attention (Eqs. 2-3).
std::vector<std::vector<double>> brute_interaction(const Tensor& hk, const Tensor& hl,
                                                   const Tensor& w) {
  const int rows_k = hk.rows(), rows_l = hl.rows(), d = hk.cols();
  std::vector<std::vector<double>> v(static_cast<std::size_t>(rows_k),
                                     std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int p = 0; p < rows_k; ++p) {
    std::vector<double> logits;
    for (int q = 1; q < rows_l; ++q) {
      double acc = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) acc += hk.at(p, a) * w.at(a, b) * hl.at(q, b);
      logits.push_back(acc);
    }
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double z = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      z += l;
    }
    for (std::size_t q = 0; q < logits.size(); ++q)
      for (int b = 0; b < d; ++b)
        v[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)] +=
            (logits[q] / z) * hl.at(static_cast<int>(q) + 1, b);
  }
  return v;
}

// Explicit evaluation of Eqs. 4-8 for one graph.
std::vector<double> brute_selection(const std::vector<EncodedNode>& nodes, const Tensor& w,
                                    const Tensor& sel_w, const Tensor& sel_b) {
  std::vector<double> logits;
  for (const EncodedNode& node : nodes) {
    const int m = node.layout.m, n = node.layout.n, d = node.h.cols();
    std::vector<std::vector<double>> mat(static_cast<std::size_t>(m + 1),
                                         std::vector<double>(static_cast<std::size_t>(n + 1)));
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= n; ++j) {
        double acc = 0.0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            acc += node.h.at(1 + i, a) * w.at(a, b) * node.h.at(m + 2 + j, b);
        mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = acc;
      }
    auto softmax_vec = [](std::vector<double> in) {
      double mx = in[0];
      for (double v : in) mx = std::max(mx, v);
      double z = 0.0;
      for (double& v : in) {
        v = std::exp(v - mx);
        z += v;
      }
      for (double& v : in) v /= z;
      return in;
    };
    std::vector<double> beta_src(static_cast<std::size_t>(m + 1), 0.0);
    for (int j = 0; j <= n; ++j) {
      std::vector<double> col;
      for (int i = 0; i <= m; ++i) col.push_back(mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      const std::vector<double> sm = softmax_vec(col);
      for (int i = 0; i <= m; ++i) beta_src[static_cast<std::size_t>(i)] += sm[static_cast<std::size_t>(i)] / (n + 1);
    }
    std::vector<double> beta_hyp(static_cast<std::size_t>(n + 1), 0.0);
    for (int i = 0; i <= m; ++i) {
      const std::vector<double> sm = softmax_vec(mat[static_cast<std::size_t>(i)]);
      for (int j = 0; j <= n; ++j) beta_hyp[static_cast<std::size_t>(j)] += sm[static_cast<std::size_t>(j)] / (m + 1);
    }
    std::vector<double> h_src(static_cast<std::size_t>(d), 0.0), h_hyp(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i <= m; ++i)
      for (int a = 0; a < d; ++a) h_src[static_cast<std::size_t>(a)] += beta_src[static_cast<std::size_t>(i)] * node.h.at(1 + i, a);
    for (int j = 0; j <= n; ++j)
      for (int a = 0; a < d; ++a) h_hyp[static_cast<std::size_t>(a)] += beta_hyp[static_cast<std::size_t>(j)] * node.h.at(m + 2 + j, a);
    double logit = sel_b.at(0);
    for (int a = 0; a < d; ++a) {
      logit += h_src[static_cast<std::size_t>(a)] * h_hyp[static_cast<std::size_t>(a)] * sel_w.at(a, 0);
      logit += h_src[static_cast<std::size_t>(a)] * sel_w.at(d + a, 0);
      logit += h_hyp[static_cast<std::size_t>(a)] * sel_w.at(2 * d + a, 0);
    }
    logits.push_back(logit);
  }
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

}  // namespace

TEST_SUITE_BEGIN("head");

TEST_CASE("interaction over identical evidence rows returns that row") {
  Rng rng(3);
  EncodedNode node_k = fake_node(1, 2, 3, rng);
  EncodedNode node_l = fake_node(1, 2, 3, rng);
  for (int q = 0; q < node_l.h.rows(); ++q)
    for (int d = 0; d < 3; ++d) node_l.h.at(q, d) = (d == 0) ? 0.7 : (d == 1 ? -0.2 : 1.5);
  Tensor w = random_tensor({3, 3}, rng);
  Tape tape;
  Tensor v = node_interaction(tape, node_k, node_l, w);
  for (int p = 0; p < v.rows(); ++p) {
    CHECK(v.at(p, 0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(v.at(p, 1) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(v.at(p, 2) == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("zero interaction weight gives uniform attention") {
  Rng rng(4);
  EncodedNode node_k = fake_node(1, 2, 3, rng);
  EncodedNode node_l = fake_node(1, 1, 3, rng);
  Tensor w = Tensor::zeros({3, 3});
  Tape tape;
  Tensor alpha;
  Tensor v = node_interaction(tape, node_k, node_l, w, &alpha);
  const int valid = node_l.h.rows() - 1;
  for (int p = 0; p < alpha.rows(); ++p)
    for (int q = 0; q < valid; ++q)
      CHECK(alpha.at(p, q) == doctest::Approx(1.0 / valid).epsilon(1e-12));
  for (int p = 0; p < v.rows(); ++p)
    for (int d = 0; d < 3; ++d) {
      double mean_row = 0.0;
      for (int q = 1; q < node_l.h.rows(); ++q) mean_row += node_l.h.at(q, d) / valid;
      CHECK(v.at(p, d) == doctest::Approx(mean_row).epsilon(1e-12));
    }
}

TEST_CASE("interaction matches the explicit-loop oracle") {
  Rng rng(5);
  EncodedNode node_k = fake_node(1, 2, 3, rng);
  EncodedNode node_l = fake_node(1, 2, 3, rng);
  Tensor w = random_tensor({3, 3}, rng);
  Tape tape;
  Tensor v = node_interaction(tape, node_k, node_l, w);
  const auto oracle = brute_interaction(node_k.h, node_l.h, w);
  for (int p = 0; p < v.rows(); ++p)
    for (int d = 0; d < 3; ++d)
      CHECK(std::abs(v.at(p, d) - oracle[static_cast<std::size_t>(p)][static_cast<std::size_t>(d)]) < 1e-12);
}

TEST_CASE("interaction rejects dimension mismatch") {
  Rng rng(6);
  EncodedNode a = fake_node(1, 1, 3, rng);
  EncodedNode b = fake_node(1, 1, 4, rng);
  Tensor w = random_tensor({3, 3}, rng);
  Tape tape;
  CHECK_THROWS_AS(node_interaction(tape, a, b, w), ContractError);
}

TEST_CASE("single-node graph selects itself with certainty") {
  Rng rng(7);
  const std::vector<EncodedNode> nodes{fake_node(2, 3, 4, rng)};
  Tensor w = random_tensor({4, 4}, rng);
  Tensor sel_w = random_tensor({12, 1}, rng);
  Tensor sel_b = random_tensor({1}, rng);
  Tape tape;
  Tensor gamma = node_selection_scores(tape, nodes, w, sel_w, sel_b);
  REQUIRE(gamma.size() == 1);
  CHECK(gamma.at(0) == 1.0);  // exact: softmax of one logit
}

TEST_CASE("selection attention normalizations hold on random graphs") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EncodedNode> nodes;
    const int k_count = 1 + static_cast<int>(rng.below(4));
    const int m = 1 + static_cast<int>(rng.below(4));
    for (int k = 0; k < k_count; ++k)
      nodes.push_back(fake_node(m, 1 + static_cast<int>(rng.below(4)), 4, rng, 2.0));
    Tensor w = random_tensor({4, 4}, rng);
    Tensor sel_w = random_tensor({12, 1}, rng);
    Tensor sel_b = random_tensor({1}, rng);
    Tape tape;
    NodeSelectionDetail detail;
    Tensor gamma = node_selection_scores(tape, nodes, w, sel_w, sel_b, &detail);
    double gamma_sum = 0.0;
    for (int k = 0; k < gamma.size(); ++k) gamma_sum += gamma.at(k);
    CHECK(gamma_sum == doctest::Approx(1.0).epsilon(1e-9));
    for (int k = 0; k < k_count; ++k) {
      double src_sum = 0.0, hyp_sum = 0.0;
      for (int i = 0; i < detail.beta_source[static_cast<std::size_t>(k)].size(); ++i)
        src_sum += detail.beta_source[static_cast<std::size_t>(k)].at(i);
      for (int j = 0; j < detail.beta_hypothesis[static_cast<std::size_t>(k)].size(); ++j)
        hyp_sum += detail.beta_hypothesis[static_cast<std::size_t>(k)].at(j);
      CHECK(src_sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(hyp_sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("selection matches the explicit evaluation of the formulas") {
  Rng rng(9);
  std::vector<EncodedNode> nodes{fake_node(1, 1, 2, rng), fake_node(1, 1, 2, rng)};
  Tensor w = random_tensor({2, 2}, rng);
  Tensor sel_w = random_tensor({6, 1}, rng);
  Tensor sel_b = random_tensor({1}, rng);
  Tape tape;
  Tensor gamma = node_selection_scores(tape, nodes, w, sel_w, sel_b);
  const std::vector<double> oracle = brute_selection(nodes, w, sel_w, sel_b);
  REQUIRE(gamma.size() == 2);
  CHECK(std::abs(gamma.at(0) - oracle[0]) < 1e-12);
  CHECK(std::abs(gamma.at(1) - oracle[1]) < 1e-12);
}

TEST_CASE("verification representation is the gamma-weighted sum") {
  Rng rng(10);
  const int rows = 6, d = 3;
  std::vector<Tensor> fine{random_tensor({rows, d}, rng), random_tensor({rows, d}, rng),
                           random_tensor({rows, d}, rng)};
  Tape tape;

  // one-hot gamma picks one input exactly
  Tensor onehot = Tensor::from({3}, {0, 1, 0});
  Tensor picked = verification_reps(tape, fine, onehot);
  CHECK(picked.data() == fine[1].data());

  // identical inputs are a fixed point for any convex gamma
  std::vector<Tensor> same{fine[0], fine[0], fine[0]};
  Tensor gamma = Tensor::from({3}, {0.2, 0.5, 0.3});
  Tensor fixed = verification_reps(tape, same, gamma);
  for (int i = 0; i < rows * d; ++i)
    CHECK(fixed.at(i) == doctest::Approx(fine[0].at(i)).epsilon(1e-12));

  // random case against the explicit weighted sum
  Tensor mixed = verification_reps(tape, fine, gamma);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < d; ++c) {
      const double expect = 0.2 * fine[0].at(r, c) + 0.5 * fine[1].at(r, c) + 0.3 * fine[2].at(r, c);
      CHECK(std::abs(mixed.at(r, c) - expect) < 1e-12);
    }

  std::vector<Tensor> bad{fine[0], random_tensor({rows + 1, d}, rng), fine[2]};
  CHECK_THROWS_AS(verification_reps(tape, bad, gamma), ContractError);
}

TEST_CASE("token quality rows are probability distributions") {
  Rng rng(11);
  Tensor h = random_tensor({5, 4}, rng);
  Tensor v = random_tensor({5, 4}, rng);
  Tensor cls_w = random_tensor({12, 2}, rng);
  Tensor cls_b = random_tensor({2}, rng);
  Tape tape;
  Tensor p = token_quality(tape, h, v, cls_w, cls_b);
  for (int r = 0; r < p.rows(); ++r)
    CHECK(p.at(r, 0) + p.at(r, 1) == doctest::Approx(1.0).epsilon(1e-9));

  // zero-initialized classifier is perfectly uncertain
  Tensor zero_w = Tensor::zeros({12, 2});
  Tensor zero_b = Tensor::zeros({2});
  Tensor half = token_quality(tape, h, v, zero_w, zero_b);
  for (int r = 0; r < half.rows(); ++r) {
    CHECK(half.at(r, 0) == 0.5);
    CHECK(half.at(r, 1) == 0.5);
  }
}

TEST_CASE("token quality matches the direct formula on a single position") {
  Rng rng(12);
  Tensor h = random_tensor({1, 2}, rng);
  Tensor v = random_tensor({1, 2}, rng);
  Tensor cls_w = random_tensor({6, 2}, rng);
  Tensor cls_b = random_tensor({2}, rng);
  Tape tape;
  Tensor p = token_quality(tape, h, v, cls_w, cls_b);

  const double feat[6] = {h.at(0, 0) * v.at(0, 0), h.at(0, 1) * v.at(0, 1),
                          h.at(0, 0),              h.at(0, 1),
                          v.at(0, 0),              v.at(0, 1)};
  double logit0 = cls_b.at(0), logit1 = cls_b.at(1);
  for (int i = 0; i < 6; ++i) {
    logit0 += feat[i] * cls_w.at(i, 0);
    logit1 += feat[i] * cls_w.at(i, 1);
  }
  const double mx = std::max(logit0, logit1);
  const double z = std::exp(logit0 - mx) + std::exp(logit1 - mx);
  CHECK(std::abs(p.at(0, 0) - std::exp(logit0 - mx) / z) < 1e-12);
  CHECK(std::abs(p.at(0, 1) - std::exp(logit1 - mx) / z) < 1e-12);
}

TEST_CASE("sentence score averages the hypothesis range") {
  PairLayout layout;
  layout.m = 2;
  layout.n = 1;
  Tape tape;

  Tensor all_one = Tensor::zeros({6, 2});
  for (int r = 0; r < 6; ++r) all_one.at(r, 1) = 1.0;
  CHECK(sentence_score(tape, all_one, layout).value() == 1.0);

  Tensor p = Tensor::zeros({6, 2});
  p.at(4, 1) = 0.4;  // hypothesis token
  p.at(5, 1) = 0.8;  // final [SEP]
  p.at(1, 1) = 0.9;  // source positions must not contribute
  CHECK(sentence_score(tape, p, layout).value() == doctest::Approx(0.6).epsilon(1e-12));

  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor probs = Tensor::zeros({6, 2});
    for (int r = 0; r < 6; ++r) {
      const double q = rng.uniform();
      probs.at(r, 0) = 1 - q;
      probs.at(r, 1) = q;
    }
    const double f = sentence_score(tape, probs, layout).value();
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("ged baseline") {
  Rng rng(14);
  EncodedNode node = fake_node(2, 2, 3, rng);
  Tape tape;

  Tensor zero_w = Tensor::zeros({3, 2});
  Tensor zero_b = Tensor::zeros({2});
  GedBaselineOutput zero = ged_baseline(tape, node, zero_w, zero_b);
  CHECK(zero.sentence_score.value() == 0.5);

  Tensor w = random_tensor({3, 2}, rng);
  Tensor b = random_tensor({2}, rng);
  GedBaselineOutput out = ged_baseline(tape, node, w, b);
  for (int r = 0; r < out.token_probs.rows(); ++r)
    CHECK(out.token_probs.at(r, 0) + out.token_probs.at(r, 1) ==
          doctest::Approx(1.0).epsilon(1e-9));

  // equals the per-token softmax of the affine head evaluated directly
  for (int r = 0; r < node.h.rows(); ++r) {
    double l0 = b.at(0), l1 = b.at(1);
    for (int a = 0; a < 3; ++a) {
      l0 += node.h.at(r, a) * w.at(a, 0);
      l1 += node.h.at(r, a) * w.at(a, 1);
    }
    const double mx = std::max(l0, l1);
    const double z = std::exp(l0 - mx) + std::exp(l1 - mx);
    CHECK(std::abs(out.token_probs.at(r, 1) - std::exp(l1 - mx) / z) < 1e-12);
  }
  // sentence score averages the hypothesis range of those probabilities
  double expect = 0.0;
  for (int p = node.layout.hypothesis_index(0); p <= node.layout.final_sep_index(); ++p)
    expect += out.token_probs.at(p, 1) / (node.layout.n + 1);
  CHECK(std::abs(out.sentence_score.value() - expect) < 1e-12);
}

TEST_CASE("gqe and qe heads") {
  Rng rng(15);
  EncodedNode node = fake_node(1, 2, 3, rng);
  Tape tape;

  CHECK(gqe_score(tape, node, Tensor::zeros({3, 2}), Tensor::zeros({2})).value() == 0.5);
  CHECK(qe_score(tape, node, Tensor::zeros({3, 1}), Tensor::zeros({1})).value() == 0.5);

  Tensor gqe_w = random_tensor({3, 2}, rng);
  Tensor gqe_b = random_tensor({2}, rng);
  const double got = gqe_score(tape, node, gqe_w, gqe_b).value();
  double l0 = gqe_b.at(0), l1 = gqe_b.at(1);
  for (int a = 0; a < 3; ++a) {
    l0 += node.h.at(0, a) * gqe_w.at(a, 0);
    l1 += node.h.at(0, a) * gqe_w.at(a, 1);
  }
  const double mx = std::max(l0, l1);
  const double z = std::exp(l0 - mx) + std::exp(l1 - mx);
  CHECK(std::abs(got - std::exp(l1 - mx) / z) < 1e-12);

  for (int trial = 0; trial < 10; ++trial) {
    Tensor qe_w = random_tensor({3, 1}, rng, 4.0);
    Tensor qe_b = random_tensor({1}, rng, 4.0);
    const double q = qe_score(tape, node, qe_w, qe_b).value();
    CHECK(q > 0.0);
    CHECK(q < 1.0);
  }
}

TEST_CASE("full head pass: normalization, permutation covariance, K=1 degenerate") {
  Rng rng(16);
  HeadParams head = HeadParams::init(4, 0.5, 99);

  std::vector<EncodedNode> nodes{fake_node(2, 2, 4, rng), fake_node(2, 3, 4, rng),
                                 fake_node(2, 1, 4, rng)};
  Tape tape;
  GroupScores scores = score_group(tape, nodes, head);
  double gsum = 0.0;
  for (int k = 0; k < scores.gamma.size(); ++k) gsum += scores.gamma.at(k);
  CHECK(gsum == doctest::Approx(1.0).epsilon(1e-9));

  // permuting the nodes permutes gamma and leaves per-node probabilities alone
  std::vector<EncodedNode> permuted{nodes[2], nodes[0], nodes[1]};
  Tape tape2;
  GroupScores pscores = score_group(tape2, permuted, head);
  CHECK(pscores.gamma.at(0) == doctest::Approx(scores.gamma.at(2)).epsilon(1e-12));
  CHECK(pscores.gamma.at(1) == doctest::Approx(scores.gamma.at(0)).epsilon(1e-12));
  CHECK(pscores.gamma.at(2) == doctest::Approx(scores.gamma.at(1)).epsilon(1e-12));
  for (int i = 0; i < pscores.token_probs[1].size(); ++i)
    CHECK(pscores.token_probs[1].at(i) ==
          doctest::Approx(scores.token_probs[0].at(i)).epsilon(1e-12));
  CHECK(pscores.sentence[1].value() == doctest::Approx(scores.sentence[0].value()).epsilon(1e-12));

  // K=1: gamma is exactly one and the pipeline equals the self-only picture
  std::vector<EncodedNode> solo{nodes[0]};
  Tape tape3;
  GroupScores sscores = score_group(tape3, solo, head);
  CHECK(sscores.gamma.at(0) == 1.0);
  Tape tape4;
  Tensor self_v = node_interaction(tape4, solo[0], solo[0], head.w_interaction);
  Tensor self_p = token_quality(tape4, solo[0].h, self_v, head.cls_w, head.cls_b);
  for (int i = 0; i < self_p.size(); ++i)
    CHECK(sscores.token_probs[0].at(i) == doctest::Approx(self_p.at(i)).epsilon(1e-12));
}

TEST_CASE("whole-head gradients match finite differences on a K=3 toy graph") {
  Rng rng(17);
  HeadParams head = HeadParams::init(4, 0.5, 7);
  std::vector<EncodedNode> nodes{fake_node(2, 2, 4, rng), fake_node(2, 3, 4, rng),
                                 fake_node(2, 1, 4, rng)};
  auto loss_value = [&]() {
    Tape tape;
    GroupScores scores = score_group(tape, nodes, head);
    Tensor total = scores.sentence[0];
    for (std::size_t k = 1; k < scores.sentence.size(); ++k)
      total = add(tape, total, mul_scalar(tape, scores.sentence[k], 0.5 + static_cast<double>(k)));
    return total.value();
  };
  for (auto& [name, tensor] : head.parameters()) tensor.zero_grad();
  {
    Tape tape;
    GroupScores scores = score_group(tape, nodes, head);
    Tensor total = scores.sentence[0];
    for (std::size_t k = 1; k < scores.sentence.size(); ++k)
      total = add(tape, total, mul_scalar(tape, scores.sentence[k], 0.5 + static_cast<double>(k)));
    tape.backward(total);
  }
  for (auto& [name, tensor] : head.parameters()) {
    if (name.rfind("head.ged", 0) == 0 || name.rfind("head.gqe", 0) == 0 ||
        name.rfind("head.qe", 0) == 0)
      continue;  // baseline heads do not feed this loss
    INFO("parameter ", name);
    CHECK(vernet::testing::max_grad_rel_error(loss_value, tensor, tensor.grad(), 1e-6) < 1e-4);
  }
}

TEST_SUITE_END();

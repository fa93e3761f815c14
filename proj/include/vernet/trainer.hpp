#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vernet/annotator.hpp"
#include "vernet/encoder.hpp"
#include "vernet/head.hpp"
#include "vernet/metrics.hpp"

namespace vernet {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Model {
  EncoderConfig config;
  EncoderParams encoder;
  HeadParams head;

  static Model init(const EncoderConfig& config);
  std::vector<NamedTensor> parameters();
};

enum class LossMaskPolicy { Joint, SourceOnly, HypothesisOnly };

struct TrainConfig {
  double learning_rate = 5e-5;
  int batch_groups = 8;
  int accumulation_steps = 4;
  int epochs = 1;
  std::uint64_t seed = 1;
  LossMaskPolicy mask_policy = LossMaskPolicy::Joint;
  // when > 0, adds the baseline-head objectives (GED cross entropy, GQE
  // sentence cross entropy, QE squared error against gold F0.5)
  double aux_loss_weight = 0.0;
  int max_tokens = 120;

  void validate() const;
};

// Gold labels for one group: source side plus one sequence per hypothesis,
// each carrying a trailing sentence-end slot.
struct GroupLabels {
  TokenLabelSeq source;
  std::vector<TokenLabelSeq> hypotheses;
  std::vector<double> gold_f05;  // per hypothesis, used by the QE head
};

GroupLabels make_group_labels(const HypothesisGroup& group);

// Per-position training targets in pair-layout order; slot 0 ([CLS]) is a
// dummy that the mask always excludes.
std::vector<int> pair_targets(const PairLayout& layout, const TokenLabelSeq& source,
                              const TokenLabelSeq& hypothesis);
std::vector<std::uint8_t> pair_loss_mask(const PairLayout& layout, LossMaskPolicy policy);

// Joint training loss of one group: mean over nodes of the per-node mean
// cross entropy over valid positions 1..m+n_k+2.
Tensor group_loss(Tape& tape, Model& model, const HypothesisGroup& group,
                  const GroupLabels& labels, const Vocabulary& vocab, const TrainConfig& config);

class Adam {
 public:
  Adam(std::vector<NamedTensor> params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  long step_count() const { return step_; }

  // moment access for checkpointing (aligned with the parameter order)
  const std::vector<NamedTensor>& params() const { return params_; }
  std::vector<std::vector<double>>& moment1() { return m_; }
  std::vector<std::vector<double>>& moment2() { return v_; }
  void set_step_count(long s) { step_ = s; }

 private:
  std::vector<NamedTensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_train_loss = 0.0;
  std::optional<double> dev_token_f05;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  long steps = 0;
};

// Token-level detection quality of the current model over labeled groups:
// predictions use P(y=0) > 0.5, evaluated on every valid position of every
// node (the same positions the loss covers).
PRF evaluate_token_f05(Model& model, const std::vector<HypothesisGroup>& groups,
                       const std::vector<GroupLabels>& labels, const Vocabulary& vocab,
                       const TrainConfig& config);

// Adam training with gradient accumulation; model parameters end at the
// best-dev epoch (falling back to the final epoch without a dev set).
// Throws TrainingDiverged on a non-finite loss.
TrainResult train(Model& model, Adam& optimizer, const std::vector<HypothesisGroup>& train_groups,
                  const std::vector<GroupLabels>& train_labels,
                  const std::vector<HypothesisGroup>& dev_groups,
                  const std::vector<GroupLabels>& dev_labels, const Vocabulary& vocab,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

// --- gradient checking -------------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> per_tensor;
};

// Central finite differences against captured analytic gradients; the
// relative error denominator is floored at 1e-6.
GradCheckReport fd_compare(const std::function<double()>& loss_fn,
                           std::vector<NamedTensor>& params,
                           const std::map<std::string, std::vector<double>>& analytic,
                           double fd_step);

GradCheckReport grad_check(Model& model, const HypothesisGroup& group, const GroupLabels& labels,
                           const Vocabulary& vocab, const TrainConfig& config,
                           double fd_step = 1e-5);

// --- checkpointing -------------------------------------------------------------

struct Checkpoint {
  EncoderConfig config;
  Vocabulary vocab;
  std::vector<std::pair<std::string, Tensor>> tensors;  // model parameters by name
  std::vector<std::pair<std::string, std::vector<double>>> adam_m, adam_v;
  long step = 0;

  static Checkpoint capture(Model& model, const Vocabulary& vocab, Adam* optimizer = nullptr);
  // rebuilds a model (and optionally restores optimizer moments)
  Model restore() const;
  void restore_optimizer(Adam& optimizer) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace vernet

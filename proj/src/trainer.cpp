#include "vernet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vernet/util.hpp"

namespace vernet {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0 || batch_groups < 1 || accumulation_steps < 1 || epochs < 1 ||
      max_tokens < 1)
    throw ContractError("train config: all values must be positive");
}

Model Model::init(const EncoderConfig& config) {
  Model m;
  m.config = config;
  m.encoder = EncoderParams::init(config);
  m.head = HeadParams::init(config.dim, config.init_stddev, derive_seed(config.seed, 0x6865ad));
  return m;
}

std::vector<NamedTensor> Model::parameters() {
  std::vector<NamedTensor> out = encoder.parameters();
  for (NamedTensor& nt : head.parameters()) out.push_back(nt);
  return out;
}

GroupLabels make_group_labels(const HypothesisGroup& group) {
  if (group.references.empty())
    throw ContractError("make_group_labels: group has no gold reference");
  const TokenList& gold = group.references.front();
  GroupLabels labels;
  labels.source = label_tokens(group.source, gold);

  std::vector<std::vector<Edit>> gold_edits;
  gold_edits.reserve(group.references.size());
  for (const TokenList& ref : group.references)
    gold_edits.push_back(extract_edits(group.source, ref));

  for (const Hypothesis& hyp : group.hypotheses) {
    labels.hypotheses.push_back(label_tokens(hyp.tokens, gold));
    labels.gold_f05.push_back(
        sentence_f05_multi(extract_edits(group.source, hyp.tokens), gold_edits));
  }
  return labels;
}

std::vector<int> pair_targets(const PairLayout& layout, const TokenLabelSeq& source,
                              const TokenLabelSeq& hypothesis) {
  std::vector<int> targets(static_cast<std::size_t>(layout.length()), 1);
  for (int i = 0; i < layout.m && i < source.size() - 1; ++i)
    targets[static_cast<std::size_t>(layout.source_index(i))] =
        source.labels[static_cast<std::size_t>(i)];
  targets[static_cast<std::size_t>(layout.source_sep_index())] = source.labels.back();
  for (int j = 0; j < layout.n && j < hypothesis.size() - 1; ++j)
    targets[static_cast<std::size_t>(layout.hypothesis_index(j))] =
        hypothesis.labels[static_cast<std::size_t>(j)];
  targets[static_cast<std::size_t>(layout.final_sep_index())] = hypothesis.labels.back();
  return targets;
}

std::vector<std::uint8_t> pair_loss_mask(const PairLayout& layout, LossMaskPolicy policy) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(layout.length()), 0);
  const bool src = policy != LossMaskPolicy::HypothesisOnly;
  const bool hyp = policy != LossMaskPolicy::SourceOnly;
  if (src)
    for (int p = 1; p <= layout.source_sep_index(); ++p) mask[static_cast<std::size_t>(p)] = 1;
  if (hyp)
    for (int p = layout.hypothesis_index(0); p <= layout.final_sep_index(); ++p)
      mask[static_cast<std::size_t>(p)] = 1;
  return mask;
}

Tensor group_loss(Tape& tape, Model& model, const HypothesisGroup& group,
                  const GroupLabels& labels, const Vocabulary& vocab, const TrainConfig& config) {
  if (labels.hypotheses.size() != group.hypotheses.size())
    throw ContractError("group_loss: labels missing for some hypotheses");
  std::vector<EncodedNode> nodes =
      encode_group(tape, group, vocab, model.encoder, model.config, config.max_tokens);
  GroupScores scores = score_group(tape, nodes, model.head);

  const int k_count = static_cast<int>(nodes.size());
  Tensor total;
  for (int k = 0; k < k_count; ++k) {
    const PairLayout& layout = nodes[static_cast<std::size_t>(k)].layout;
    const std::vector<int> targets =
        pair_targets(layout, labels.source, labels.hypotheses[static_cast<std::size_t>(k)]);
    const std::vector<std::uint8_t> mask = pair_loss_mask(layout, config.mask_policy);
    Tensor node_loss =
        cross_entropy(tape, scores.logits[static_cast<std::size_t>(k)], targets, mask);
    total = total.defined() ? add(tape, total, node_loss) : node_loss;
  }
  Tensor loss = mul_scalar(tape, total, 1.0 / k_count);

  if (config.aux_loss_weight > 0.0) {
    Tensor aux;
    for (int k = 0; k < k_count; ++k) {
      const EncodedNode& node = nodes[static_cast<std::size_t>(k)];
      const std::vector<int> targets =
          pair_targets(node.layout, labels.source, labels.hypotheses[static_cast<std::size_t>(k)]);
      const std::vector<std::uint8_t> mask = pair_loss_mask(node.layout, config.mask_policy);
      Tensor ged = cross_entropy(tape, ged_logits(tape, node.h, model.head.ged_w, model.head.ged_b),
                                 targets, mask);
      // sentence-level grammaticality target: 1 iff the hypothesis is fully correct
      const int ys = labels.hypotheses[static_cast<std::size_t>(k)].all_correct() ? 1 : 0;
      Tensor cls = slice_rows(tape, node.h, 0, 1);
      Tensor gqe = cross_entropy(tape, affine(tape, cls, model.head.gqe_w, model.head.gqe_b), {ys},
                                 {1});
      Tensor qe = qe_score(tape, node, model.head.qe_w, model.head.qe_b);
      Tensor qe_err =
          add(tape, qe, Tensor::scalar(-labels.gold_f05[static_cast<std::size_t>(k)]));
      Tensor node_aux = add(tape, add(tape, ged, gqe), mul(tape, qe_err, qe_err));
      aux = aux.defined() ? add(tape, aux, node_aux) : node_aux;
    }
    loss = add(tape, loss, mul_scalar(tape, aux, config.aux_loss_weight / k_count));
  }
  return loss;
}

Adam::Adam(std::vector<NamedTensor> params, double learning_rate, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const NamedTensor& nt : params_) {
    m_.emplace_back(nt.second.data().size(), 0.0);
    v_.emplace_back(nt.second.data().size(), 0.0);
  }
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor& t = params_[p].second;
    std::vector<double>& m = m_[p];
    std::vector<double>& v = v_[p];
    for (std::size_t i = 0; i < t.data().size(); ++i) {
      const double g = t.grad()[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      t.data()[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (NamedTensor& nt : params_) nt.second.zero_grad();
}

PRF evaluate_token_f05(Model& model, const std::vector<HypothesisGroup>& groups,
                       const std::vector<GroupLabels>& labels, const Vocabulary& vocab,
                       const TrainConfig& config) {
  std::vector<std::vector<int>> predicted, gold;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Tape tape;
    std::vector<EncodedNode> nodes =
        encode_group(tape, groups[g], vocab, model.encoder, model.config, config.max_tokens);
    GroupScores scores = score_group(tape, nodes, model.head);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const PairLayout& layout = nodes[k].layout;
      const std::vector<int> targets = pair_targets(layout, labels[g].source, labels[g].hypotheses[k]);
      const std::vector<std::uint8_t> mask = pair_loss_mask(layout, config.mask_policy);
      std::vector<int> pred_row, gold_row;
      for (int p = 0; p < layout.length(); ++p) {
        if (!mask[static_cast<std::size_t>(p)]) continue;
        pred_row.push_back(scores.token_probs[k].at(p, 0) > 0.5 ? 0 : 1);
        gold_row.push_back(targets[static_cast<std::size_t>(p)]);
      }
      predicted.push_back(std::move(pred_row));
      gold.push_back(std::move(gold_row));
    }
  }
  return token_prf(predicted, gold);
}

namespace {

struct ParamSnapshot {
  std::vector<std::vector<double>> data, m, v;
  long step = 0;
};

ParamSnapshot snapshot(std::vector<NamedTensor>& params, Adam& optimizer) {
  ParamSnapshot s;
  for (NamedTensor& nt : params) s.data.push_back(nt.second.data());
  s.m = optimizer.moment1();
  s.v = optimizer.moment2();
  s.step = optimizer.step_count();
  return s;
}

void restore_snapshot(const ParamSnapshot& s, std::vector<NamedTensor>& params, Adam& optimizer) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].second.data() = s.data[i];
  optimizer.moment1() = s.m;
  optimizer.moment2() = s.v;
  optimizer.set_step_count(s.step);
}

}  // namespace

TrainResult train(Model& model, Adam& optimizer, const std::vector<HypothesisGroup>& train_groups,
                  const std::vector<GroupLabels>& train_labels,
                  const std::vector<HypothesisGroup>& dev_groups,
                  const std::vector<GroupLabels>& dev_labels, const Vocabulary& vocab,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_groups.empty()) throw ContractError("train: empty training set");
  if (train_groups.size() != train_labels.size())
    throw ContractError("train: group/label count mismatch");

  std::vector<NamedTensor> params = model.parameters();
  const int groups_per_step = config.batch_groups * config.accumulation_steps;
  const double scale = 1.0 / groups_per_step;

  TrainResult result;
  ParamSnapshot best;
  double best_dev = -1.0;

  std::vector<std::size_t> order(train_groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch) + 101));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    int pending = 0;
    for (std::size_t gi = 0; gi < order.size(); ++gi) {
      const std::size_t g = order[gi];
      Tape tape;
      Tensor loss = group_loss(tape, model, train_groups[g], train_labels[g], vocab, config);
      const double loss_value = loss.value();
      if (!std::isfinite(loss_value))
        throw TrainingDiverged("train: non-finite loss at epoch " + std::to_string(epoch) +
                               " group " + std::to_string(gi));
      loss_sum += loss_value;
      Tensor scaled = mul_scalar(tape, loss, scale);
      tape.backward(scaled);
      if (++pending == groups_per_step) {
        optimizer.step();
        optimizer.zero_grad();
        pending = 0;
        ++result.steps;
        log_debug("step " + std::to_string(optimizer.step_count()) + " loss " +
                  format_double(loss_value));
      }
    }
    if (pending > 0) {
      optimizer.step();
      optimizer.zero_grad();
      ++result.steps;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_train_loss = loss_sum / static_cast<double>(train_groups.size());
    if (!dev_groups.empty()) {
      record.dev_token_f05 =
          evaluate_token_f05(model, dev_groups, dev_labels, vocab, config).f_beta;
      if (*record.dev_token_f05 > best_dev) {
        best_dev = *record.dev_token_f05;
        best = snapshot(params, optimizer);
        result.best_epoch = epoch;
      }
    } else {
      best = snapshot(params, optimizer);
      result.best_epoch = epoch;
    }
    result.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  restore_snapshot(best, params, optimizer);
  return result;
}

// --- gradient checking ---------------------------------------------------------

GradCheckReport fd_compare(const std::function<double()>& loss_fn,
                           std::vector<NamedTensor>& params,
                           const std::map<std::string, std::vector<double>>& analytic,
                           double fd_step) {
  GradCheckReport report;
  for (NamedTensor& nt : params) {
    const auto it = analytic.find(nt.first);
    if (it == analytic.end()) throw ContractError("fd_compare: missing analytic grads for " + nt.first);
    GradCheckEntry entry;
    entry.name = nt.first;
    std::vector<double>& data = nt.second.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + fd_step;
      const double plus = loss_fn();
      data[i] = saved - fd_step;
      const double minus = loss_fn();
      data[i] = saved;
      const double fd = (plus - minus) / (2.0 * fd_step);
      const double a = it->second[i];
      const double rel =
          std::abs(a - fd) / std::max({1e-6, std::abs(a), std::abs(fd)});
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_tensor.push_back(std::move(entry));
  }
  return report;
}

GradCheckReport grad_check(Model& model, const HypothesisGroup& group, const GroupLabels& labels,
                           const Vocabulary& vocab, const TrainConfig& config, double fd_step) {
  std::vector<NamedTensor> params = model.parameters();
  for (NamedTensor& nt : params) nt.second.zero_grad();
  {
    Tape tape;
    Tensor loss = group_loss(tape, model, group, labels, vocab, config);
    tape.backward(loss);
  }
  std::map<std::string, std::vector<double>> analytic;
  for (NamedTensor& nt : params) analytic[nt.first] = nt.second.grad();
  for (NamedTensor& nt : params) nt.second.zero_grad();

  auto loss_fn = [&]() {
    Tape tape;
    return group_loss(tape, model, group, labels, vocab, config).value();
  };
  return fd_compare(loss_fn, params, analytic, fd_step);
}

// --- checkpointing ----------------------------------------------------------------

Checkpoint Checkpoint::capture(Model& model, const Vocabulary& vocab, Adam* optimizer) {
  Checkpoint ckpt;
  ckpt.config = model.config;
  ckpt.vocab = vocab;
  for (NamedTensor& nt : model.parameters()) {
    Tensor copy = Tensor::from(nt.second.shape(), nt.second.data());
    copy.set_trainable(true);
    ckpt.tensors.emplace_back(nt.first, copy);
  }
  if (optimizer) {
    const std::vector<NamedTensor>& params = optimizer->params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      ckpt.adam_m.emplace_back(params[i].first, optimizer->moment1()[i]);
      ckpt.adam_v.emplace_back(params[i].first, optimizer->moment2()[i]);
    }
    ckpt.step = optimizer->step_count();
  }
  return ckpt;
}

Model Checkpoint::restore() const {
  Model model = Model::init(config);
  std::vector<NamedTensor> params = model.parameters();
  if (params.size() != tensors.size())
    throw ContractError("checkpoint: parameter count does not match config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != tensors[i].first)
      throw ContractError("checkpoint: parameter name mismatch: " + params[i].first + " vs " +
                          tensors[i].first);
    if (params[i].second.shape() != tensors[i].second.shape())
      throw ContractError("checkpoint: shape mismatch for " + params[i].first);
    params[i].second.data() = tensors[i].second.data();
  }
  return model;
}

void Checkpoint::restore_optimizer(Adam& optimizer) const {
  if (adam_m.empty()) return;
  if (optimizer.moment1().size() != adam_m.size())
    throw ContractError("checkpoint: optimizer state size mismatch");
  for (std::size_t i = 0; i < adam_m.size(); ++i) {
    optimizer.moment1()[i] = adam_m[i].second;
    optimizer.moment2()[i] = adam_v[i].second;
  }
  optimizer.set_step_count(step);
}

namespace {

void write_values(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ' ';
    os << format_double(values[i]);
  }
  os << '\n';
}

std::vector<double> read_values(const std::string& line, std::size_t expected) {
  std::vector<double> out;
  out.reserve(expected);
  const char* p = line.c_str();
  char* end = nullptr;
  while (*p) {
    const double v = std::strtod(p, &end);
    if (end == p) break;
    out.push_back(v);
    p = end;
  }
  if (out.size() != expected)
    throw std::runtime_error("checkpoint: expected " + std::to_string(expected) + " values, got " +
                             std::to_string(out.size()));
  return out;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
  os << "vernet-checkpoint 1\n";
  os << "dim " << config.dim << "\nlayers " << config.layers << "\nheads " << config.heads
     << "\nff_dim " << config.ff_dim << "\nmax_positions " << config.max_positions
     << "\nvocab_size " << config.vocab_size << "\nln_eps " << format_double(config.ln_eps)
     << "\ninit_stddev " << format_double(config.init_stddev) << "\nseed " << config.seed
     << "\nstep " << step << "\n";
  const std::string vocab_text = vocab.serialize();
  os << "vocab_begin\n" << vocab_text << "vocab_end\n";
  os << "tensors " << tensors.size() << "\n";
  for (const auto& [name, tensor] : tensors) {
    os << "tensor " << name << ' ' << tensor.rank();
    for (int d : tensor.shape()) os << ' ' << d;
    os << '\n';
    write_values(os, tensor.data());
  }
  os << "adam " << adam_m.size() << "\n";
  for (std::size_t i = 0; i < adam_m.size(); ++i) {
    os << "moments " << adam_m[i].first << ' ' << adam_m[i].second.size() << '\n';
    write_values(os, adam_m[i].second);
    write_values(os, adam_v[i].second);
  }
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("checkpoint: cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  std::size_t at = 0;
  auto next = [&]() -> const std::string& {
    if (at >= lines.size()) throw std::runtime_error("checkpoint: truncated file");
    return lines[at++];
  };
  if (next() != "vernet-checkpoint 1")
    throw std::runtime_error("checkpoint: unrecognized header (version error)");

  Checkpoint ckpt;
  auto read_kv = [&](const std::string& key) -> std::string {
    const std::string& l = next();
    if (l.rfind(key + ' ', 0) != 0)
      throw std::runtime_error("checkpoint: expected key " + key + ", got: " + l);
    return l.substr(key.size() + 1);
  };
  ckpt.config.dim = std::stoi(read_kv("dim"));
  ckpt.config.layers = std::stoi(read_kv("layers"));
  ckpt.config.heads = std::stoi(read_kv("heads"));
  ckpt.config.ff_dim = std::stoi(read_kv("ff_dim"));
  ckpt.config.max_positions = std::stoi(read_kv("max_positions"));
  ckpt.config.vocab_size = std::stoi(read_kv("vocab_size"));
  ckpt.config.ln_eps = std::strtod(read_kv("ln_eps").c_str(), nullptr);
  ckpt.config.init_stddev = std::strtod(read_kv("init_stddev").c_str(), nullptr);
  ckpt.config.seed = std::stoull(read_kv("seed"));
  ckpt.step = std::stol(read_kv("step"));

  if (next() != "vocab_begin") throw std::runtime_error("checkpoint: missing vocab section");
  std::string vocab_text;
  while (true) {
    const std::string& l = next();
    if (l == "vocab_end") break;
    vocab_text += l;
    vocab_text += '\n';
  }
  ckpt.vocab = Vocabulary::deserialize(vocab_text);

  const std::size_t tensor_count = std::stoul(read_kv("tensors"));
  for (std::size_t t = 0; t < tensor_count; ++t) {
    std::istringstream hs(next());
    std::string tag, name;
    int rank = 0;
    hs >> tag >> name >> rank;
    if (tag != "tensor" || rank < 1) throw std::runtime_error("checkpoint: bad tensor header");
    std::vector<int> shape(static_cast<std::size_t>(rank));
    std::size_t count = 1;
    for (int d = 0; d < rank; ++d) {
      hs >> shape[static_cast<std::size_t>(d)];
      count *= static_cast<std::size_t>(shape[static_cast<std::size_t>(d)]);
    }
    Tensor tensor = Tensor::from(shape, read_values(next(), count));
    tensor.set_trainable(true);
    ckpt.tensors.emplace_back(name, tensor);
  }

  const std::size_t adam_count = std::stoul(read_kv("adam"));
  for (std::size_t t = 0; t < adam_count; ++t) {
    std::istringstream hs(next());
    std::string tag, name;
    std::size_t count = 0;
    hs >> tag >> name >> count;
    if (tag != "moments") throw std::runtime_error("checkpoint: bad moments header");
    ckpt.adam_m.emplace_back(name, read_values(next(), count));
    ckpt.adam_v.emplace_back(name, read_values(next(), count));
  }
  return ckpt;
}

}  // namespace vernet

#include "vernet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "vernet/dataset.hpp"
#include "vernet/metrics.hpp"
#include "vernet/reranker.hpp"
#include "vernet/synthdata.hpp"
#include "vernet/util.hpp"

namespace vernet {

using nlohmann::json;

KvConfig KvConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot read " + path);
  KvConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else if (!(ls >> value)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": key without value");
    }
    config.set(key, value);
  }
  return config;
}

std::string KvConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stoi(it->second);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stoull(it->second);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return it->second == "1" || it->second == "true" || it->second == "yes";
}

EncoderConfig encoder_config_from(const KvConfig& config, int vocab_size) {
  EncoderConfig ec;
  ec.dim = config.get_int("dim", 64);
  ec.layers = config.get_int("layers", 2);
  ec.heads = config.get_int("heads", 4);
  ec.ff_dim = config.get_int("ff_dim", 256);
  ec.max_positions = config.get_int("max_positions", 128);
  ec.ln_eps = config.get_double("ln_eps", 1e-5);
  ec.init_stddev = config.get_double("init_stddev", 0.02);
  ec.seed = config.get_u64("seed", 1);
  ec.vocab_size = vocab_size;
  return ec;
}

TrainConfig train_config_from(const KvConfig& config) {
  TrainConfig tc;
  tc.learning_rate = config.get_double("lr", 5e-5);
  tc.batch_groups = config.get_int("batch_groups", 8);
  tc.accumulation_steps = config.get_int("accum_steps", 4);
  tc.epochs = config.get_int("epochs", 1);
  tc.seed = config.get_u64("seed", 1);
  tc.aux_loss_weight = config.get_double("aux_loss_weight", 0.0);
  tc.max_tokens = config.get_int("max_tokens", 120);
  const std::string policy = config.get("mask_policy", "joint");
  if (policy == "joint")
    tc.mask_policy = LossMaskPolicy::Joint;
  else if (policy == "src")
    tc.mask_policy = LossMaskPolicy::SourceOnly;
  else if (policy == "hyp")
    tc.mask_policy = LossMaskPolicy::HypothesisOnly;
  else
    throw std::runtime_error("config: mask_policy must be joint, src, or hyp");
  return tc;
}

namespace {

CorruptionConfig corruption_config_from(const KvConfig& config) {
  CorruptionConfig cc = default_corruption_config();
  cc.error_rate = config.get_double("error_rate", 0.25);
  cc.k = config.get_int("k", 5);
  cc.spurious_rate = config.get_double("spurious_rate", 0.2);
  cc.score_noise = config.get_double("score_noise", 1.0);
  return cc;
}

json labels_to_json(const TokenLabelSeq& labels) {
  json out = json::array();
  for (int l : labels.labels) out.push_back(l);
  return out;
}

json edits_to_json(const std::vector<Edit>& edits) {
  json out = json::array();
  for (const Edit& e : edits) out.push_back(serialize_edit(e));
  return out;
}

struct LoadedCorpus {
  std::vector<HypothesisGroup> groups;
  std::vector<GroupLabels> labels;
};

LoadedCorpus load_labeled_corpus(const std::string& path, bool lowercase) {
  LoadedCorpus corpus;
  const std::vector<DatasetRecord> records = read_jsonl(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    HypothesisGroup group = to_group(records[i], lowercase);
    if (group.references.empty())
      throw std::runtime_error(path + ": record " + std::to_string(i + 1) + " has no gold");
    if (group.hypotheses.empty())
      throw std::runtime_error(path + ": record " + std::to_string(i + 1) + " has no hypotheses");
    corpus.labels.push_back(make_group_labels(group));
    corpus.groups.push_back(std::move(group));
  }
  return corpus;
}

}  // namespace

int run_synth(const KvConfig& config, const std::string& out_path) {
  const CorruptionConfig cc = corruption_config_from(config);
  const int group_count = config.get_int("groups", 200);
  const std::uint64_t seed = config.get_u64("seed", 1);
  const std::vector<HypothesisGroup> corpus = generate_corpus(group_count, cc, seed);
  std::vector<DatasetRecord> records;
  records.reserve(corpus.size());
  for (const HypothesisGroup& g : corpus) records.push_back(from_group(g));
  write_jsonl(out_path, records);
  log_info("synth: wrote " + std::to_string(records.size()) + " groups to " + out_path);
  return 0;
}

int run_annotate(const KvConfig& config, const std::string& in_path, const std::string& out_path) {
  const bool lowercase = config.get_bool("lowercase", false);
  const std::vector<DatasetRecord> records = read_jsonl(in_path);
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("annotate: cannot write " + out_path);
  int failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DatasetRecord& record = records[i];
    if (record.gold.empty()) {
      std::cerr << "annotate: record " << (i + 1) << " has no gold; skipped\n";
      ++failures;
      continue;
    }
    const TokenList source = tokenize(record.source, lowercase);
    const TokenList gold = tokenize(record.gold.front(), lowercase);
    json j;
    j["source"] = record.source;
    if (record.gold.size() == 1)
      j["gold"] = record.gold.front();
    else
      j["gold"] = record.gold;
    const std::vector<Edit> source_edits = extract_edits(source, gold);
    j["source_edits"] = edits_to_json(source_edits);
    j["source_labels"] = labels_to_json(labels_from_edits(source, source_edits));
    json hyps = json::array();
    for (const RecordHypothesis& h : record.hypotheses) {
      const TokenList hyp = tokenize(h.text, lowercase);
      json jh;
      jh["text"] = h.text;
      if (h.model_score) jh["model_score"] = *h.model_score;
      const std::vector<Edit> hyp_edits = extract_edits(hyp, gold);
      jh["edits"] = edits_to_json(hyp_edits);
      jh["labels"] = labels_to_json(labels_from_edits(hyp, hyp_edits));
      hyps.push_back(std::move(jh));
    }
    j["hypotheses"] = std::move(hyps);
    os << j.dump() << '\n';
  }
  return failures == 0 ? 0 : 2;
}

int run_train(const KvConfig& config, const std::string& train_path,
              const std::optional<std::string>& dev_path, const std::string& checkpoint_path) {
  const bool lowercase = config.get_bool("lowercase", false);
  LoadedCorpus train_corpus = load_labeled_corpus(train_path, lowercase);
  LoadedCorpus dev_corpus;
  if (dev_path) dev_corpus = load_labeled_corpus(*dev_path, lowercase);

  std::vector<TokenList> vocab_corpus;
  for (const HypothesisGroup& g : train_corpus.groups) {
    vocab_corpus.push_back(g.source);
    for (const TokenList& ref : g.references) vocab_corpus.push_back(ref);
    for (const Hypothesis& h : g.hypotheses) vocab_corpus.push_back(h.tokens);
  }
  const Vocabulary vocab = Vocabulary::build(vocab_corpus, config.get_int("min_count", 1));

  Model model = Model::init(encoder_config_from(config, vocab.size()));
  const TrainConfig tc = train_config_from(config);
  Adam optimizer(model.parameters(), tc.learning_rate);

  train(model, optimizer, train_corpus.groups, train_corpus.labels, dev_corpus.groups,
        dev_corpus.labels, vocab, tc, [](const EpochRecord& r) {
          std::ostringstream line;
          line << "epoch " << r.epoch << " loss " << format_double(r.mean_train_loss);
          if (r.dev_token_f05) line << " dev_f05 " << format_double(*r.dev_token_f05);
          std::cout << line.str() << '\n';
        });

  Checkpoint::capture(model, vocab, &optimizer).save(checkpoint_path);
  log_info("train: checkpoint written to " + checkpoint_path);
  return 0;
}

int run_score(const KvConfig& config, const std::string& checkpoint_path,
              const std::string& in_path, const std::string& out_path) {
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  Model model = ckpt.restore();
  const bool lowercase = config.get_bool("lowercase", false);
  const bool baselines = config.get_bool("baselines", false);
  const int max_tokens = config.get_int("max_tokens", 120);

  std::vector<DatasetRecord> records = read_jsonl(in_path);
  int failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    DatasetRecord& record = records[i];
    if (record.hypotheses.empty()) {
      std::cerr << "score: record " << (i + 1) << " has no hypotheses; skipped\n";
      ++failures;
      continue;
    }
    const HypothesisGroup group = to_group(record, lowercase);
    Tape tape;
    std::vector<EncodedNode> nodes =
        encode_group(tape, group, ckpt.vocab, model.encoder, model.config, max_tokens);
    GroupScores scores = score_group(tape, nodes, model.head);

    record.gamma.clear();
    for (int k = 0; k < scores.gamma.size(); ++k) record.gamma.push_back(scores.gamma.at(k));
    for (std::size_t k = 0; k < record.hypotheses.size(); ++k) {
      RecordHypothesis& rh = record.hypotheses[k];
      const EncodedNode& node = nodes[k];
      rh.f = scores.sentence[k].value();
      rh.token_probs.clear();
      for (int p = node.layout.hypothesis_index(0); p <= node.layout.final_sep_index(); ++p)
        rh.token_probs.push_back(scores.token_probs[k].at(p, 1));
      if (baselines) {
        GedBaselineOutput ged = ged_baseline(tape, node, model.head.ged_w, model.head.ged_b);
        rh.ged_f = ged.sentence_score.value();
        rh.gqe = gqe_score(tape, node, model.head.gqe_w, model.head.gqe_b).value();
        rh.qe = qe_score(tape, node, model.head.qe_w, model.head.qe_b).value();
      }
    }
    // source-side estimates reported from the top-ranked pair
    record.source_token_probs.clear();
    const EncodedNode& first = nodes.front();
    for (int p = 1; p <= first.layout.source_sep_index(); ++p)
      record.source_token_probs.push_back(scores.token_probs[0].at(p, 1));
  }
  write_jsonl(out_path, records);
  return failures == 0 ? 0 : 2;
}

int run_rerank(const KvConfig& config, const std::string& in_path, const std::string& out_path,
               const std::optional<std::string>& weights_in,
               const std::optional<std::string>& weights_out) {
  const bool lowercase = config.get_bool("lowercase", false);
  std::vector<DatasetRecord> records = read_jsonl(in_path);
  if (records.empty()) throw std::runtime_error("rerank: empty input");

  bool have_model_score = true;
  for (const DatasetRecord& r : records)
    for (const RecordHypothesis& h : r.hypotheses) {
      if (!h.f)
        throw std::runtime_error("rerank: hypotheses lack f scores; run `score` first");
      if (!h.model_score) have_model_score = false;
    }

  std::vector<std::string> names;
  if (have_model_score) names.push_back("model_score");
  names.push_back("vernet_f");
  names.push_back("length_ratio");

  auto features_of = [&](const DatasetRecord& record) {
    const double src_len =
        std::max<std::size_t>(1, tokenize(record.source, lowercase).size());
    std::vector<std::vector<double>> rows;
    for (const RecordHypothesis& h : record.hypotheses) {
      std::vector<double> row;
      if (have_model_score) row.push_back(*h.model_score);
      row.push_back(*h.f);
      row.push_back(static_cast<double>(tokenize(h.text, lowercase).size()) / src_len);
      rows.push_back(std::move(row));
    }
    return rows;
  };

  RankerWeights weights;
  if (weights_in) {
    weights = RankerWeights::load(*weights_in);
    if (weights.feature_names != names)
      throw std::runtime_error("rerank: weight file features do not match this corpus");
  } else {
    std::vector<RankingGroup> ranking;
    for (const DatasetRecord& record : records) {
      if (record.gold.empty())
        throw std::runtime_error("rerank: learning weights requires gold references");
      RankingGroup rg;
      rg.features = features_of(record);
      const HypothesisGroup group = to_group(record, lowercase);
      std::vector<std::vector<Edit>> gold_edits;
      for (const TokenList& ref : group.references)
        gold_edits.push_back(extract_edits(group.source, ref));
      for (const Hypothesis& h : group.hypotheses)
        rg.gold_f05.push_back(
            sentence_f05_multi(extract_edits(group.source, h.tokens), gold_edits));
      ranking.push_back(std::move(rg));
    }
    CoordinateAscentConfig cac;
    cac.restarts = config.get_int("ca_restarts", 5);
    cac.delta = config.get_double("ca_delta", 0.05);
    cac.levels = config.get_int("ca_levels", 6);
    cac.max_passes = config.get_int("ca_max_passes", 100);
    cac.seed = config.get_u64("seed", 1);
    cac.binary_p_at_1 = config.get_bool("rank_binary", false);
    CoordinateAscentResult result = coordinate_ascent(ranking, names, cac);
    weights = result.weights;
    log_info("rerank: learned objective " + format_double(result.objective));
    if (weights_out) weights.save(*weights_out);
  }

  for (DatasetRecord& record : records) {
    const std::vector<std::vector<double>> rows = features_of(record);
    const std::vector<int> order = rank_order(rows, weights.weights);
    std::vector<RecordHypothesis> reordered;
    reordered.reserve(record.hypotheses.size());
    for (int idx : order) {
      RecordHypothesis h = record.hypotheses[static_cast<std::size_t>(idx)];
      double score = 0.0;
      for (std::size_t f = 0; f < weights.weights.size(); ++f)
        score += weights.weights[f] * rows[static_cast<std::size_t>(idx)][f];
      h.rank_score = score;
      reordered.push_back(std::move(h));
    }
    record.hypotheses = std::move(reordered);
  }
  write_jsonl(out_path, records);
  return 0;
}

int run_eval(const KvConfig& config, const std::string& in_path, const std::string& sys_path,
             const std::optional<std::string>& out_path) {
  const bool lowercase = config.get_bool("lowercase", false);
  const std::vector<DatasetRecord> gold_records = read_jsonl(in_path);
  const std::vector<DatasetRecord> sys_records = read_jsonl(sys_path);
  if (gold_records.size() != sys_records.size())
    throw std::runtime_error("eval: gold and system files have different record counts");
  if (gold_records.empty()) throw std::runtime_error("eval: empty input");

  std::vector<std::vector<Edit>> system_edits;
  std::vector<std::vector<std::vector<Edit>>> gold_edit_sets;
  std::vector<TokenList> candidates, sources;
  std::vector<std::vector<TokenList>> references;
  std::vector<std::vector<int>> hyp_pred, hyp_gold, src_pred, src_gold;
  std::vector<double> pcc_f, pcc_gold;
  std::vector<double> group_pccs;

  for (std::size_t i = 0; i < gold_records.size(); ++i) {
    const DatasetRecord& gr = gold_records[i];
    const DatasetRecord& sr = sys_records[i];
    if (gr.gold.empty())
      throw std::runtime_error("eval: record " + std::to_string(i + 1) + " has no gold");
    if (sr.hypotheses.empty())
      throw std::runtime_error("eval: system record " + std::to_string(i + 1) +
                               " has no hypotheses");
    const TokenList source = tokenize(gr.source, lowercase);
    std::vector<TokenList> refs;
    for (const std::string& g : gr.gold) refs.push_back(tokenize(g, lowercase));
    const TokenList top1 = tokenize(sr.hypotheses.front().text, lowercase);

    system_edits.push_back(extract_edits(source, top1));
    std::vector<std::vector<Edit>> ref_edits;
    for (const TokenList& ref : refs) ref_edits.push_back(extract_edits(source, ref));
    gold_edit_sets.push_back(ref_edits);
    candidates.push_back(top1);
    sources.push_back(source);
    references.push_back(refs);

    // token-level detection when scores are present
    std::vector<double> group_f, group_gold_f05;
    for (const RecordHypothesis& h : sr.hypotheses) {
      const TokenList hyp = tokenize(h.text, lowercase);
      if (!h.token_probs.empty()) {
        if (h.token_probs.size() != hyp.size() + 1)
          throw std::runtime_error("eval: token_probs misaligned with hypothesis tokens at record " +
                                   std::to_string(i + 1));
        std::vector<int> pred;
        for (double p : h.token_probs) pred.push_back((1.0 - p) > 0.5 ? 0 : 1);
        hyp_pred.push_back(std::move(pred));
        hyp_gold.push_back(label_tokens(hyp, refs.front()).labels);
      }
      if (h.f) {
        group_f.push_back(*h.f);
        group_gold_f05.push_back(sentence_f05_multi(extract_edits(source, hyp), ref_edits));
      }
    }
    if (!sr.source_token_probs.empty()) {
      if (sr.source_token_probs.size() != source.size() + 1)
        throw std::runtime_error("eval: source_token_probs misaligned at record " +
                                 std::to_string(i + 1));
      std::vector<int> pred;
      for (double p : sr.source_token_probs) pred.push_back((1.0 - p) > 0.5 ? 0 : 1);
      src_pred.push_back(std::move(pred));
      src_gold.push_back(label_tokens(source, refs.front()).labels);
    }
    for (std::size_t k = 0; k < group_f.size(); ++k) {
      pcc_f.push_back(group_f[k]);
      pcc_gold.push_back(group_gold_f05[k]);
    }
    if (config.get_bool("pcc_per_group", false) && group_f.size() >= 2) {
      try {
        group_pccs.push_back(pcc(group_f, group_gold_f05));
      } catch (const std::exception&) {
        // constant group; skipped
      }
    }
  }

  std::vector<std::pair<std::string, double>> report;
  const PRF span = span_prf(system_edits, gold_edit_sets);
  report.emplace_back("span_precision", span.precision);
  report.emplace_back("span_recall", span.recall);
  report.emplace_back("span_f05", span.f_beta);
  report.emplace_back("gleu", corpus_gleu(candidates, sources, references));
  if (!hyp_pred.empty()) {
    const PRF prf = token_prf(hyp_pred, hyp_gold);
    report.emplace_back("token_hyp_precision", prf.precision);
    report.emplace_back("token_hyp_recall", prf.recall);
    report.emplace_back("token_hyp_f05", prf.f_beta);
  }
  if (!src_pred.empty()) {
    const PRF prf = token_prf(src_pred, src_gold);
    report.emplace_back("token_src_precision", prf.precision);
    report.emplace_back("token_src_recall", prf.recall);
    report.emplace_back("token_src_f05", prf.f_beta);
  }
  if (pcc_f.size() >= 2) {
    if (config.get_bool("pcc_per_group", false)) {
      if (!group_pccs.empty()) {
        double acc = 0.0;
        for (double v : group_pccs) acc += v;
        report.emplace_back("pcc_per_group", acc / static_cast<double>(group_pccs.size()));
      }
    } else {
      try {
        report.emplace_back("pcc", pcc(pcc_f, pcc_gold));
      } catch (const std::exception& e) {
        log_warn(std::string("eval: pcc skipped: ") + e.what());
      }
    }
  }
  report.emplace_back("records", static_cast<double>(gold_records.size()));

  std::size_t width = 0;
  for (const auto& [key, value] : report) width = std::max(width, key.size());
  for (const auto& [key, value] : report)
    std::cout << key << std::string(width + 2 - key.size(), ' ') << format_double(value) << '\n';
  if (out_path) {
    std::ofstream os(*out_path);
    if (!os) throw std::runtime_error("eval: cannot write " + *out_path);
    for (const auto& [key, value] : report) os << key << '\t' << format_double(value) << '\n';
  }
  return 0;
}

int run_gradcheck(const KvConfig& config) {
  CorruptionConfig cc = default_corruption_config();
  cc.k = config.get_int("k", 3);
  cc.error_rate = config.get_double("error_rate", 0.4);
  const std::vector<HypothesisGroup> corpus =
      generate_corpus(1, cc, config.get_u64("seed", 7));
  const HypothesisGroup& group = corpus.front();

  std::vector<TokenList> vocab_corpus{group.source};
  for (const TokenList& ref : group.references) vocab_corpus.push_back(ref);
  for (const Hypothesis& h : group.hypotheses) vocab_corpus.push_back(h.tokens);
  const Vocabulary vocab = Vocabulary::build(vocab_corpus, 1);

  KvConfig small = config;
  if (!small.has("dim")) small.set("dim", "8");
  if (!small.has("layers")) small.set("layers", "1");
  if (!small.has("heads")) small.set("heads", "2");
  if (!small.has("ff_dim")) small.set("ff_dim", "16");
  Model model = Model::init(encoder_config_from(small, vocab.size()));
  const TrainConfig tc = train_config_from(small);
  const GroupLabels labels = make_group_labels(group);

  const double fd_step = config.get_double("fd_step", 1e-5);
  const double tol = config.get_double("gradcheck_tol", 1e-4);
  const GradCheckReport report = grad_check(model, group, labels, vocab, tc, fd_step);
  for (const GradCheckEntry& entry : report.per_tensor)
    std::cout << entry.name << '\t' << format_double(entry.max_rel_error) << '\n';
  std::cout << "max_rel_error\t" << format_double(report.max_rel_error) << '\n';
  std::cout << (report.max_rel_error < tol ? "PASS" : "FAIL") << '\n';
  return report.max_rel_error < tol ? 0 : 1;
}

}  // namespace vernet

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vernet/cli.hpp"

namespace {

struct CommonFlags {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key=value config file");
  cmd->add_option("--seed", flags.seed, "override the seed");
  cmd->add_option("--k", flags.k, "override hypotheses per group");
  cmd->add_option("--set", flags.overrides, "extra key=value overrides")->take_all();
}

vernet::KvConfig merge_config(const CommonFlags& flags) {
  vernet::KvConfig config;
  if (flags.config_path) config = vernet::KvConfig::from_file(*flags.config_path);
  for (const std::string& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got: " + kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) config.set("seed", std::to_string(*flags.seed));
  if (flags.k) config.set("k", std::to_string(*flags.k));
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-hypothesis quality estimation for text correction"};
  app.require_subcommand(1);

  CommonFlags synth_flags, annotate_flags, train_flags, score_flags, rerank_flags, eval_flags,
      gradcheck_flags;
  std::string synth_out;
  std::string annotate_in, annotate_out;
  std::string train_in, train_ckpt;
  std::optional<std::string> train_dev;
  std::string score_ckpt, score_in, score_out;
  std::string rerank_in, rerank_out;
  std::optional<std::string> rerank_weights_in, rerank_weights_out;
  std::string eval_in, eval_sys;
  std::optional<std::string> eval_out;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, synth_flags);
  synth->add_option("--out", synth_out, "output dataset (JSON lines)")->required();

  CLI::App* annotate = app.add_subcommand("annotate", "extract edits and token labels");
  add_common(annotate, annotate_flags);
  annotate->add_option("--in", annotate_in, "input dataset")->required();
  annotate->add_option("--out", annotate_out, "labeled output")->required();

  CLI::App* train = app.add_subcommand("train", "train the quality estimation model");
  add_common(train, train_flags);
  train->add_option("--in", train_in, "training dataset")->required();
  train->add_option("--dev", train_dev, "development dataset");
  train->add_option("--checkpoint", train_ckpt, "output checkpoint path")->required();

  CLI::App* score = app.add_subcommand("score", "score hypotheses with a trained model");
  add_common(score, score_flags);
  score->add_option("--checkpoint", score_ckpt, "model checkpoint")->required();
  score->add_option("--in", score_in, "input dataset")->required();
  score->add_option("--out", score_out, "scored output")->required();

  CLI::App* rerank = app.add_subcommand("rerank", "reorder hypotheses with learned weights");
  add_common(rerank, rerank_flags);
  rerank->add_option("--in", rerank_in, "scored dataset")->required();
  rerank->add_option("--out", rerank_out, "reranked output")->required();
  rerank->add_option("--weights", rerank_weights_in, "apply existing weights");
  rerank->add_option("--learn-weights", rerank_weights_out,
                     "learn weights from gold and write them here");

  CLI::App* eval = app.add_subcommand("eval", "evaluate system output against gold");
  add_common(eval, eval_flags);
  eval->add_option("--in", eval_in, "gold dataset")->required();
  eval->add_option("--sys", eval_sys, "system output (scored or reranked)")->required();
  eval->add_option("--out", eval_out, "machine-readable report path");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  add_common(gradcheck, gradcheck_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return vernet::run_synth(merge_config(synth_flags), synth_out);
    if (annotate->parsed())
      return vernet::run_annotate(merge_config(annotate_flags), annotate_in, annotate_out);
    if (train->parsed())
      return vernet::run_train(merge_config(train_flags), train_in, train_dev, train_ckpt);
    if (score->parsed())
      return vernet::run_score(merge_config(score_flags), score_ckpt, score_in, score_out);
    if (rerank->parsed())
      return vernet::run_rerank(merge_config(rerank_flags), rerank_in, rerank_out,
                                rerank_weights_in, rerank_weights_out);
    if (eval->parsed())
      return vernet::run_eval(merge_config(eval_flags), eval_in, eval_sys, eval_out);
    if (gradcheck->parsed()) return vernet::run_gradcheck(merge_config(gradcheck_flags));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

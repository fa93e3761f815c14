#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vernet/textpipe.hpp"
#include "vernet/util.hpp"

namespace vernet {

// Controls how gold sentences degrade into sources and how beam-like
// hypotheses are fabricated around them.
struct CorruptionConfig {
  double error_rate = 0.25;  // per-token corruption probability
  // operation mix; must sum to 1
  double p_replace = 0.55;
  double p_delete = 0.15;
  double p_insert = 0.15;
  double p_swap = 0.15;
  int k = 5;  // hypotheses per group
  // chance a non-top hypothesis picks up one extra spurious corruption
  double spurious_rate = 0.2;
  // stddev of the noise folded into pseudo decoder scores
  double score_noise = 1.0;
  std::map<std::string, std::vector<std::string>> confusions;
  std::vector<std::string> filler;  // insertable tokens

  void validate() const;
};

// Morphological confusion lexicon (number/tense/article toggles) over the
// built-in toy vocabulary.
CorruptionConfig default_corruption_config();

// All surface forms the template grammar can emit.
const std::vector<std::string>& synth_vocabulary();

// Grammatical sentence from the built-in template grammar.
TokenList sample_clean_sentence(Rng& rng);

// Per-position corruption at the configured rate and mix; with rate 1 and a
// non-empty sentence the result always differs from gold.
TokenList corrupt(const TokenList& gold, const CorruptionConfig& config, Rng& rng);

// K hypotheses that repair a decreasing fraction of the source's edits and
// occasionally inject a spurious one. Pseudo decoder scores decrease with
// rank; whenever source != gold at least one hypothesis is strictly closer
// to gold than the source is.
std::vector<Hypothesis> make_hypotheses(const TokenList& source, const TokenList& gold,
                                        const CorruptionConfig& config, Rng& rng);

HypothesisGroup make_group(const TokenList& gold, const CorruptionConfig& config, Rng& rng);

// Deterministic corpus: group i derives its private rng from (seed, i).
std::vector<HypothesisGroup> generate_corpus(int group_count, const CorruptionConfig& config,
                                             std::uint64_t seed);

}  // namespace vernet

#include "vernet/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vernet/annotator.hpp"

namespace vernet {

namespace {

// noun surface forms: singular, plural
const std::vector<std::pair<std::string, std::string>>& nouns() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"cat", "cats"},         {"dog", "dogs"},         {"student", "students"},
      {"teacher", "teachers"}, {"phone", "phones"},     {"book", "books"},
      {"house", "houses"},     {"idea", "ideas"},       {"city", "cities"},
      {"child", "children"},   {"apple", "apples"},     {"engineer", "engineers"},
      {"umbrella", "umbrellas"}, {"artist", "artists"}, {"belt", "belts"},
      {"garden", "gardens"},   {"letter", "letters"},   {"window", "windows"},
      {"door", "doors"},       {"friend", "friends"},   {"doctor", "doctors"},
      {"question", "questions"}, {"answer", "answers"}, {"song", "songs"},
      {"picture", "pictures"}, {"road", "roads"},       {"train", "trains"},
      {"river", "rivers"},     {"mountain", "mountains"}, {"story", "stories"},
      {"orange", "oranges"},   {"egg", "eggs"},         {"island", "islands"},
      {"office", "offices"},   {"machine", "machines"}, {"lesson", "lessons"},
  };
  return table;
}

// verb surface forms: plain, third-singular, past
struct VerbForms {
  std::string plain, third, past;
};

const std::vector<VerbForms>& verbs() {
  static const std::vector<VerbForms> table = {
      {"see", "sees", "saw"},          {"like", "likes", "liked"},
      {"find", "finds", "found"},      {"help", "helps", "helped"},
      {"carry", "carries", "carried"}, {"fix", "fixes", "fixed"},
      {"study", "studies", "studied"}, {"write", "writes", "wrote"},
      {"watch", "watches", "watched"}, {"open", "opens", "opened"},
      {"close", "closes", "closed"},   {"paint", "paints", "painted"},
      {"move", "moves", "moved"},      {"need", "needs", "needed"},
      {"want", "wants", "wanted"},     {"buy", "buys", "bought"},
      {"sell", "sells", "sold"},       {"draw", "draws", "drew"},
      {"clean", "cleans", "cleaned"},  {"visit", "visits", "visited"},
      {"answer", "answers", "answered"}, {"teach", "teaches", "taught"},
      {"follow", "follows", "followed"}, {"repair", "repairs", "repaired"},
  };
  return table;
}

const std::vector<std::string>& adjectives() {
  static const std::vector<std::string> table = {
      "big",   "small", "old",    "new",   "red",    "blue",  "quick", "quiet", "bright",
      "strange", "happy", "early", "late", "cheap",  "useful", "broken", "clean", "heavy",
  };
  return table;
}

const std::vector<std::string>& adverbs() {
  static const std::vector<std::string> table = {
      "quickly", "slowly", "often", "rarely", "today", "carefully", "well", "twice",
  };
  return table;
}

const std::vector<std::string>& singular_determiners() {
  static const std::vector<std::string> table = {"a", "the", "this", "that", "every", "one"};
  return table;
}

const std::vector<std::string>& plural_determiners() {
  static const std::vector<std::string> table = {"the",  "these", "those", "many",
                                                 "some", "two",   "three"};
  return table;
}

bool starts_with_vowel(const std::string& word) {
  if (word.empty()) return false;
  switch (word[0]) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    default: return false;
  }
}

std::string pick(const std::vector<std::string>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

// deterministic replacement pool for tokens without a confusion entry
const std::vector<std::string>& replacement_pool() { return synth_vocabulary(); }

std::string replace_token(const std::string& token, const CorruptionConfig& config, Rng& rng) {
  auto it = config.confusions.find(token);
  if (it != config.confusions.end() && !it->second.empty())
    return it->second[static_cast<std::size_t>(rng.below(it->second.size()))];
  // fall back to any other vocabulary word
  for (int tries = 0; tries < 16; ++tries) {
    std::string cand = pick(replacement_pool(), rng);
    if (cand != token) return cand;
  }
  return token + "x";
}

TokenList corrupt_one_position(const TokenList& tokens, const CorruptionConfig& config, Rng& rng) {
  if (tokens.empty()) return tokens;
  TokenList out = tokens;
  const std::size_t pos = static_cast<std::size_t>(rng.below(out.size()));
  out[pos] = replace_token(out[pos], config, rng);
  return out;
}

}  // namespace

void CorruptionConfig::validate() const {
  const double mix = p_replace + p_delete + p_insert + p_swap;
  if (std::abs(mix - 1.0) > 1e-9)
    throw std::runtime_error("corruption config: operation mix must sum to 1");
  if (error_rate < 0.0 || error_rate > 1.0)
    throw std::runtime_error("corruption config: error rate must lie in [0,1]");
  if (k < 1) throw std::runtime_error("corruption config: k must be at least 1");
}

const std::vector<std::string>& synth_vocabulary() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> out;
    for (const auto& [sg, pl] : nouns()) {
      out.push_back(sg);
      out.push_back(pl);
    }
    for (const VerbForms& v : verbs()) {
      out.push_back(v.plain);
      out.push_back(v.third);
      out.push_back(v.past);
    }
    for (const std::string& w : adjectives()) out.push_back(w);
    for (const std::string& w : adverbs()) out.push_back(w);
    for (const std::string& w : singular_determiners()) out.push_back(w);
    for (const std::string& w : plural_determiners()) out.push_back(w);
    out.push_back("an");
    out.push_back(".");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }();
  return words;
}

CorruptionConfig default_corruption_config() {
  CorruptionConfig config;
  auto& conf = config.confusions;
  auto link = [&](const std::string& a, const std::string& b) {
    if (a != b) {
      conf[a].push_back(b);
      conf[b].push_back(a);
    }
  };
  for (const auto& [sg, pl] : nouns()) link(sg, pl);
  for (const VerbForms& v : verbs()) {
    link(v.plain, v.third);
    link(v.plain, v.past);
    link(v.third, v.past);
  }
  link("a", "an");
  link("a", "the");
  link("an", "the");
  link("this", "these");
  link("that", "those");
  link("every", "many");
  link("one", "some");
  // adjectives and adverbs confuse with their list neighbor
  const auto& adj = adjectives();
  for (std::size_t i = 0; i + 1 < adj.size(); ++i) link(adj[i], adj[i + 1]);
  const auto& adv = adverbs();
  for (std::size_t i = 0; i + 1 < adv.size(); ++i) link(adv[i], adv[i + 1]);

  config.filler = {"the", "a", "often", "very", "also"};
  return config;
}

TokenList sample_clean_sentence(Rng& rng) {
  TokenList out;
  const bool past_tense = rng.uniform() < 0.4;

  auto noun_phrase = [&](bool plural) {
    const bool with_adj = rng.uniform() < 0.45;
    const auto& noun_pair = nouns()[static_cast<std::size_t>(rng.below(nouns().size()))];
    const std::string noun = plural ? noun_pair.second : noun_pair.first;
    std::string adj = with_adj ? pick(adjectives(), rng) : "";
    std::string det = plural ? pick(plural_determiners(), rng) : pick(singular_determiners(), rng);
    const std::string& next_word = with_adj ? adj : noun;
    if (det == "a" && starts_with_vowel(next_word)) det = "an";
    out.push_back(det);
    if (with_adj) out.push_back(adj);
    out.push_back(noun);
  };

  const bool subject_plural = rng.uniform() < 0.5;
  noun_phrase(subject_plural);
  const VerbForms& verb = verbs()[static_cast<std::size_t>(rng.below(verbs().size()))];
  if (past_tense)
    out.push_back(verb.past);
  else
    out.push_back(subject_plural ? verb.plain : verb.third);
  noun_phrase(rng.uniform() < 0.5);
  if (rng.uniform() < 0.35) out.push_back(pick(adverbs(), rng));
  out.push_back(".");
  return out;
}

TokenList corrupt(const TokenList& gold, const CorruptionConfig& config, Rng& rng) {
  config.validate();
  if (gold.empty()) throw std::runtime_error("corrupt: empty gold sentence");
  TokenList out;
  out.reserve(gold.size() + 2);
  std::size_t i = 0;
  while (i < gold.size()) {
    if (rng.uniform() >= config.error_rate) {
      out.push_back(gold[i]);
      ++i;
      continue;
    }
    double op = rng.uniform();
    if (op < config.p_replace) {
      out.push_back(replace_token(gold[i], config, rng));
      ++i;
    } else if (op < config.p_replace + config.p_delete) {
      ++i;  // drop the token
    } else if (op < config.p_replace + config.p_delete + config.p_insert) {
      out.push_back(pick(config.filler, rng));
      out.push_back(gold[i]);
      ++i;
    } else {
      // swap with the next token; degrades to replace at the sentence end
      if (i + 1 < gold.size() && gold[i] != gold[i + 1]) {
        out.push_back(gold[i + 1]);
        out.push_back(gold[i]);
        i += 2;
      } else {
        out.push_back(replace_token(gold[i], config, rng));
        ++i;
      }
    }
  }
  if (out.empty()) out.push_back(replace_token(gold[0], config, rng));
  if (config.error_rate >= 1.0 && out == gold) out[0] = replace_token(out[0], config, rng);
  return out;
}

std::vector<Hypothesis> make_hypotheses(const TokenList& source, const TokenList& gold,
                                        const CorruptionConfig& config, Rng& rng) {
  config.validate();
  const std::vector<Edit> edits = extract_edits(source, gold);
  const int edit_count = static_cast<int>(edits.size());

  struct Draft {
    TokenList tokens;
    double raw_score = 0.0;
    int index = 0;
  };
  std::vector<Draft> drafts;
  drafts.reserve(static_cast<std::size_t>(config.k));

  for (int r = 0; r < config.k; ++r) {
    Draft draft;
    draft.index = r;
    if (edit_count == 0) {
      draft.tokens = source;
    } else if (r == 0) {
      // the best draft repairs everything, which guarantees at least one
      // hypothesis strictly closer to gold than the source
      draft.tokens = gold;
    } else {
      const double frac = std::clamp(
          1.0 - static_cast<double>(r) / config.k + rng.uniform(-0.3, 0.3), 0.0, 1.0);
      const int n_apply = static_cast<int>(std::lround(frac * edit_count));
      // deterministic subset: shuffle indices, keep the first n_apply sorted
      std::vector<int> indices(static_cast<std::size_t>(edit_count));
      for (int e = 0; e < edit_count; ++e) indices[static_cast<std::size_t>(e)] = e;
      for (std::size_t s = indices.size(); s > 1; --s)
        std::swap(indices[s - 1], indices[rng.below(s)]);
      indices.resize(static_cast<std::size_t>(n_apply));
      std::sort(indices.begin(), indices.end());
      std::vector<Edit> subset;
      subset.reserve(indices.size());
      for (int e : indices) subset.push_back(edits[static_cast<std::size_t>(e)]);
      draft.tokens = apply_edits(source, subset);
      if (rng.uniform() < config.spurious_rate)
        draft.tokens = corrupt_one_position(draft.tokens, config, rng);
    }
    const int dist = edit_cost(extract_edits(draft.tokens, gold));
    draft.raw_score = -static_cast<double>(dist) + config.score_noise * rng.normal();
    drafts.push_back(std::move(draft));
  }

  // beam order: pseudo decoder score decreasing with rank
  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
    return a.index < b.index;
  });
  std::vector<Hypothesis> hypotheses;
  hypotheses.reserve(drafts.size());
  for (Draft& d : drafts) hypotheses.push_back(Hypothesis{std::move(d.tokens), d.raw_score});
  return hypotheses;
}

HypothesisGroup make_group(const TokenList& gold, const CorruptionConfig& config, Rng& rng) {
  HypothesisGroup group;
  group.source = corrupt(gold, config, rng);
  group.hypotheses = make_hypotheses(group.source, gold, config, rng);
  group.references = {gold};
  return group;
}

std::vector<HypothesisGroup> generate_corpus(int group_count, const CorruptionConfig& config,
                                             std::uint64_t seed) {
  config.validate();
  std::vector<HypothesisGroup> corpus;
  corpus.reserve(static_cast<std::size_t>(group_count));
  for (int i = 0; i < group_count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    corpus.push_back(make_group(sample_clean_sentence(rng), config, rng));
  }
  return corpus;
}

}  // namespace vernet

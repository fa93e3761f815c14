#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vernet {

using TokenList = std::vector<std::string>;

// Whitespace tokenizer; collapses runs of whitespace, optional lowercasing.
TokenList tokenize(const std::string& text, bool lowercase = false);

std::string join_tokens(const TokenList& tokens);

// Word-level vocabulary with fixed special ids. Immutable once built.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kUnk = 3;

  Vocabulary() = default;

  // Deterministic id assignment: frequency descending, ties broken
  // lexicographically; tokens below min_count are dropped.
  static Vocabulary build(const std::vector<TokenList>& corpus, int min_count = 1);

  int id_of(const std::string& token) const;
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  std::vector<int> encode(const TokenList& tokens) const;
  TokenList decode(const std::vector<int>& ids) const;

  // line-oriented persistence: token<TAB>id
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);
  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);

 private:
  std::map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_ = {"[PAD]", "[CLS]", "[SEP]", "[UNK]"};
};

// Token-id layout of one [CLS] source [SEP] hypothesis [SEP] pair.
// Index 0 holds [CLS], source tokens sit at 1..m, the source [SEP] at m+1,
// hypothesis tokens at m+2..m+n+1, and the final [SEP] at m+n+2.
struct PairLayout {
  int m = 0;  // source token count (after truncation)
  int n = 0;  // hypothesis token count (after truncation)
  std::vector<int> ids;

  int length() const { return m + n + 3; }
  int cls_index() const { return 0; }
  int source_sep_index() const { return m + 1; }
  int final_sep_index() const { return m + n + 2; }
  int source_index(int i) const { return 1 + i; }
  int hypothesis_index(int j) const { return m + 2 + j; }
};

// Encodes a pair, truncating hypothesis tail first and then source tail so
// that m+n never exceeds max_tokens. Truncation is logged, not an error.
PairLayout encode_pair(const TokenList& source, const TokenList& hypothesis,
                       const Vocabulary& vocab, int max_tokens = 120);

// One source sentence with its K hypotheses; the unit of graph construction.
struct Hypothesis {
  TokenList tokens;
  std::optional<double> model_score;
};

struct HypothesisGroup {
  TokenList source;
  std::vector<Hypothesis> hypotheses;
  std::vector<TokenList> references;  // empty when gold is unavailable
};

}  // namespace vernet

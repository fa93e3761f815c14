#pragma once

#include <string>
#include <vector>

#include "vernet/textpipe.hpp"

namespace vernet {

enum class EditKind { Delete, Insert, Replace };

// One span-level edit over the labeled sentence. The span is a half-open
// token interval [start, end); Insert has start == end and the replacement
// goes in front of the token at that index.
struct Edit {
  EditKind kind;
  int start = 0;
  int end = 0;
  TokenList replacement;  // empty for Delete

  bool operator==(const Edit& other) const {
    return kind == other.kind && start == other.start && end == other.end &&
           replacement == other.replacement;
  }
};

// Per-token binary quality labels; the extra trailing slot labels the
// sentence-end marker. 1 = correct, 0 = incorrect.
struct TokenLabelSeq {
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  bool all_correct() const {
    for (int l : labels)
      if (l != 1) return false;
    return true;
  }
};

// Cost-minimal edits turning `sentence` into `gold` under unit costs.
// Adjacent non-match cells between two matches merge into one span edit,
// and backtrace ties resolve as match > replace > delete > insert.
std::vector<Edit> extract_edits(const TokenList& sentence, const TokenList& gold);

// Applies a sorted, non-overlapping edit list; the result equals the gold
// side the edits were extracted against.
TokenList apply_edits(const TokenList& sentence, const std::vector<Edit>& edits);

// Total unit cost of an edit list (replace spans cost max(len, |repl|)).
int edit_cost(const std::vector<Edit>& edits);

// Labels of length |sentence|+1: edited spans get 0, an insertion marks the
// token at its position (or the trailing slot when it falls at sentence end).
TokenLabelSeq label_tokens(const TokenList& sentence, const TokenList& gold);
TokenLabelSeq labels_from_edits(const TokenList& sentence, const std::vector<Edit>& edits);

// Both sides labeled independently against the same gold.
struct PairLabels {
  TokenLabelSeq source;
  TokenLabelSeq hypothesis;
};
PairLabels label_pair(const TokenList& source, const TokenList& hypothesis, const TokenList& gold);

// Serialization for golden-file tests: kind<TAB>start<TAB>end<TAB>replacement
std::string serialize_edit(const Edit& edit);
Edit parse_edit(const std::string& line);

const char* edit_kind_name(EditKind kind);

}  // namespace vernet

#pragma once

#include <vector>

#include "vernet/annotator.hpp"

namespace vernet {

// Precision / recall / F-beta with beta = 0.5 (precision-weighted).
struct PRF {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;
};

double f_beta_score(double precision, double recall, double beta = 0.5);
PRF prf_from_counts(long tp, long fp, long fn, double beta = 0.5);

// Micro-averaged detection scores over the corpus; the positive class is
// label 0 (incorrect). Sequences must pair up in length.
PRF token_prf(const std::vector<std::vector<int>>& predicted,
              const std::vector<std::vector<int>>& gold);

// Exact-match span scoring: a system edit counts as TP when kind, span and
// replacement all equal a gold edit. With several references the best-F0.5
// reference per sentence contributes its counts to the corpus totals.
PRF span_prf(const std::vector<std::vector<Edit>>& system_edits,
             const std::vector<std::vector<std::vector<Edit>>>& gold_edit_sets);

// F0.5 of one sentence's proposed edits; both empty counts as perfect.
double sentence_f05(const std::vector<Edit>& system_edits, const std::vector<Edit>& gold_edits);
double sentence_f05_multi(const std::vector<Edit>& system_edits,
                          const std::vector<std::vector<Edit>>& gold_edit_sets);

// Sentence-level GLEU: n-gram precision rewards reference matches and
// penalizes matches with source-only n-grams, geometric mean over n = 1..4
// with a brevity penalty; the final value averages over references.
double gleu(const TokenList& candidate, const TokenList& source,
            const std::vector<TokenList>& references, int max_n = 4);

// Corpus GLEU: mean of sentence scores.
double corpus_gleu(const std::vector<TokenList>& candidates, const std::vector<TokenList>& sources,
                   const std::vector<std::vector<TokenList>>& references, int max_n = 4);

// Sample Pearson correlation; throws on constant input.
double pcc(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vernet

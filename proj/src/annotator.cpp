#include "vernet/annotator.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace vernet {

namespace {

enum class Step : unsigned char { Match, Replace, Delete, Insert };

}  // namespace

std::vector<Edit> extract_edits(const TokenList& sentence, const TokenList& gold) {
  const int ls = static_cast<int>(sentence.size());
  const int lg = static_cast<int>(gold.size());
  // dp[i][j]: min unit cost aligning sentence[0..i) with gold[0..j)
  std::vector<std::vector<int>> dp(static_cast<std::size_t>(ls + 1),
                                   std::vector<int>(static_cast<std::size_t>(lg + 1), 0));
  for (int i = 1; i <= ls; ++i) dp[static_cast<std::size_t>(i)][0] = i;
  for (int j = 1; j <= lg; ++j) dp[0][static_cast<std::size_t>(j)] = j;
  for (int i = 1; i <= ls; ++i) {
    for (int j = 1; j <= lg; ++j) {
      const bool eq = sentence[static_cast<std::size_t>(i - 1)] == gold[static_cast<std::size_t>(j - 1)];
      int best = dp[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] + (eq ? 0 : 1);
      best = std::min(best, dp[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)] + 1);
      best = std::min(best, dp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)] + 1);
      dp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = best;
    }
  }

  // backtrace, tie preference: match > replace > delete > insert
  std::vector<Step> steps;
  int i = ls, j = lg;
  while (i > 0 || j > 0) {
    const int cur = dp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (i > 0 && j > 0 &&
        sentence[static_cast<std::size_t>(i - 1)] == gold[static_cast<std::size_t>(j - 1)] &&
        dp[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] == cur) {
      steps.push_back(Step::Match);
      --i;
      --j;
    } else if (i > 0 && j > 0 &&
               dp[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] + 1 == cur) {
      steps.push_back(Step::Replace);
      --i;
      --j;
    } else if (i > 0 && dp[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)] + 1 == cur) {
      steps.push_back(Step::Delete);
      --i;
    } else {
      steps.push_back(Step::Insert);
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());

  // merge runs of non-match steps into span edits
  std::vector<Edit> edits;
  int si = 0, gj = 0;
  std::size_t k = 0;
  while (k < steps.size()) {
    if (steps[k] == Step::Match) {
      ++si;
      ++gj;
      ++k;
      continue;
    }
    const int span_start = si;
    TokenList replacement;
    while (k < steps.size() && steps[k] != Step::Match) {
      switch (steps[k]) {
        case Step::Replace:
          replacement.push_back(gold[static_cast<std::size_t>(gj)]);
          ++si;
          ++gj;
          break;
        case Step::Delete:
          ++si;
          break;
        case Step::Insert:
          replacement.push_back(gold[static_cast<std::size_t>(gj)]);
          ++gj;
          break;
        case Step::Match:
          break;
      }
      ++k;
    }
    Edit e;
    e.start = span_start;
    e.end = si;
    e.replacement = std::move(replacement);
    if (e.start == e.end)
      e.kind = EditKind::Insert;
    else if (e.replacement.empty())
      e.kind = EditKind::Delete;
    else
      e.kind = EditKind::Replace;
    edits.push_back(std::move(e));
  }
  return edits;
}

TokenList apply_edits(const TokenList& sentence, const std::vector<Edit>& edits) {
  TokenList out;
  int pos = 0;
  for (const Edit& e : edits) {
    if (e.start < pos || e.end > static_cast<int>(sentence.size()) || e.start > e.end)
      throw std::runtime_error("apply_edits: edits must be sorted and non-overlapping");
    for (; pos < e.start; ++pos) out.push_back(sentence[static_cast<std::size_t>(pos)]);
    for (const std::string& t : e.replacement) out.push_back(t);
    pos = e.end;
  }
  for (; pos < static_cast<int>(sentence.size()); ++pos)
    out.push_back(sentence[static_cast<std::size_t>(pos)]);
  return out;
}

int edit_cost(const std::vector<Edit>& edits) {
  int cost = 0;
  for (const Edit& e : edits)
    cost += std::max(e.end - e.start, static_cast<int>(e.replacement.size()));
  return cost;
}

TokenLabelSeq labels_from_edits(const TokenList& sentence, const std::vector<Edit>& edits) {
  const int n = static_cast<int>(sentence.size());
  TokenLabelSeq seq;
  seq.labels.assign(static_cast<std::size_t>(n + 1), 1);
  for (const Edit& e : edits) {
    if (e.kind == EditKind::Insert) {
      // an insertion flags the token it lands in front of; at sentence end
      // it flags the trailing sentence-end slot
      seq.labels[static_cast<std::size_t>(std::min(e.start, n))] = 0;
    } else {
      for (int i = e.start; i < e.end; ++i) seq.labels[static_cast<std::size_t>(i)] = 0;
    }
  }
  return seq;
}

TokenLabelSeq label_tokens(const TokenList& sentence, const TokenList& gold) {
  return labels_from_edits(sentence, extract_edits(sentence, gold));
}

PairLabels label_pair(const TokenList& source, const TokenList& hypothesis,
                      const TokenList& gold) {
  return PairLabels{label_tokens(source, gold), label_tokens(hypothesis, gold)};
}

const char* edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::Delete: return "Delete";
    case EditKind::Insert: return "Insert";
    case EditKind::Replace: return "Replace";
  }
  return "?";
}

std::string serialize_edit(const Edit& edit) {
  std::ostringstream os;
  os << edit_kind_name(edit.kind) << '\t' << edit.start << '\t' << edit.end << '\t'
     << join_tokens(edit.replacement);
  return os.str();
}

Edit parse_edit(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  for (int f = 0; f < 3; ++f) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) throw std::runtime_error("parse_edit: malformed line: " + line);
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  fields.push_back(line.substr(pos));
  Edit e;
  if (fields[0] == "Delete")
    e.kind = EditKind::Delete;
  else if (fields[0] == "Insert")
    e.kind = EditKind::Insert;
  else if (fields[0] == "Replace")
    e.kind = EditKind::Replace;
  else
    throw std::runtime_error("parse_edit: unknown kind: " + fields[0]);
  e.start = std::stoi(fields[1]);
  e.end = std::stoi(fields[2]);
  e.replacement = tokenize(fields[3]);
  return e;
}

}  // namespace vernet

#include <doctest.h>

#include <algorithm>
#include <vector>

#include "vernet/annotator.hpp"
#include "vernet/util.hpp"

using namespace vernet;

namespace {

// independent oracle: plain DP distance, no backtrace, no edit objects
int levenshtein_oracle(const TokenList& a, const TokenList& b) {
  const std::size_t la = a.size(), lb = b.size();
  std::vector<int> prev(lb + 1), cur(lb + 1);
  for (std::size_t j = 0; j <= lb; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= la; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= lb; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[lb];
}

TokenList random_sentence(Rng& rng, int max_len, int vocab) {
  TokenList out;
  const std::size_t len = rng.below(static_cast<std::uint64_t>(max_len) + 1);
  for (std::size_t i = 0; i < len; ++i)
    out.push_back("w" + std::to_string(rng.below(static_cast<std::uint64_t>(vocab))));
  return out;
}

const TokenList kTable2Sentence = {"The", "a",  "Mobile",    "phone", "is",     "a",
                                   "marvelous", "invention", "to",    "charge", "the",
                                   "world"};
const TokenList kTable2Gold = {"The",       "Mobile", "phone", "is",  "a",   "marvelous",
                               "invention", "to",     "change", "the", "world", "."};

}  // namespace

TEST_SUITE_BEGIN("annotator");

TEST_CASE("token label annotation example") {
  const std::vector<Edit> edits = extract_edits(kTable2Sentence, kTable2Gold);
  REQUIRE(edits.size() == 3);
  CHECK(edits[0].kind == EditKind::Delete);
  CHECK(edits[0].start == 1);
  CHECK(edits[0].end == 2);
  CHECK(edits[0].replacement.empty());
  CHECK(edits[1].kind == EditKind::Replace);
  CHECK(edits[1].start == 9);
  CHECK(edits[1].end == 10);
  CHECK(edits[1].replacement == TokenList{"change"});
  CHECK(edits[2].kind == EditKind::Insert);
  CHECK(edits[2].start == 12);
  CHECK(edits[2].end == 12);
  CHECK(edits[2].replacement == TokenList{"."});

  const TokenLabelSeq labels = label_tokens(kTable2Sentence, kTable2Gold);
  REQUIRE(labels.size() == 13);
  for (int i = 0; i < 13; ++i) {
    const bool incorrect = (i == 1) || (i == 9) || (i == 12);
    CHECK(labels.labels[static_cast<std::size_t>(i)] == (incorrect ? 0 : 1));
  }
}

TEST_CASE("identical sentences produce no edits and all-correct labels") {
  const TokenList s = {"same", "tokens", "here"};
  CHECK(extract_edits(s, s).empty());
  const TokenLabelSeq labels = label_tokens(s, s);
  CHECK(labels.size() == 4);
  CHECK(labels.all_correct());
}

TEST_CASE("edit cost matches a DP oracle and edits reconstruct gold") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const TokenList sent = random_sentence(rng, 12, 20);
    const TokenList gold = random_sentence(rng, 12, 20);
    const std::vector<Edit> edits = extract_edits(sent, gold);
    CHECK(edit_cost(edits) == levenshtein_oracle(sent, gold));
    CHECK(apply_edits(sent, edits) == gold);
  }
}

TEST_CASE("labels and edits stay consistent") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const TokenList sent = random_sentence(rng, 10, 8);
    const TokenList gold = random_sentence(rng, 10, 8);
    const std::vector<Edit> edits = extract_edits(sent, gold);
    const TokenLabelSeq labels = labels_from_edits(sent, edits);
    std::vector<int> expect(sent.size() + 1, 1);
    for (const Edit& e : edits) {
      if (e.kind == EditKind::Insert)
        expect[std::min<std::size_t>(static_cast<std::size_t>(e.start), sent.size())] = 0;
      else
        for (int i = e.start; i < e.end; ++i) expect[static_cast<std::size_t>(i)] = 0;
    }
    CHECK(labels.labels == expect);
  }
}

TEST_CASE("insertion at the front marks the first token") {
  const TokenList sent = {"cat", "sleeps"};
  const TokenList gold = {"the", "cat", "sleeps"};
  const TokenLabelSeq labels = label_tokens(sent, gold);
  CHECK(labels.labels == std::vector<int>{0, 1, 1});
}

TEST_CASE("label_pair scores both sides against the same gold") {
  const TokenList source = {"a", "cats", "sleeps"};
  const TokenList gold = {"the", "cats", "sleep"};

  PairLabels same = label_pair(source, source, gold);
  CHECK(same.source.labels == same.hypothesis.labels);

  PairLabels fixed = label_pair(source, gold, gold);
  CHECK(fixed.hypothesis.all_correct());
  CHECK(!fixed.source.all_correct());

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const TokenList s = random_sentence(rng, 8, 6);
    const TokenList h = random_sentence(rng, 8, 6);
    const TokenList g = random_sentence(rng, 8, 6);
    const PairLabels pair = label_pair(s, h, g);
    CHECK(pair.source.labels == label_tokens(s, g).labels);
    CHECK(pair.hypothesis.labels == label_tokens(h, g).labels);
  }
}

TEST_CASE("edits serialize to tab-separated lines") {
  Edit e;
  e.kind = EditKind::Replace;
  e.start = 9;
  e.end = 10;
  e.replacement = {"change"};
  CHECK(serialize_edit(e) == "Replace\t9\t10\tchange");
  CHECK(parse_edit("Replace\t9\t10\tchange") == e);

  Edit del;
  del.kind = EditKind::Delete;
  del.start = 1;
  del.end = 2;
  CHECK(serialize_edit(del) == "Delete\t1\t2\t");
  CHECK(parse_edit(serialize_edit(del)) == del);
}

TEST_SUITE_END();

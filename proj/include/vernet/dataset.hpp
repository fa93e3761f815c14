#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vernet/textpipe.hpp"

namespace vernet {

// One JSON-lines record. Scoring and reranking augment the hypothesis
// entries in place; absent optionals are simply omitted on output.
struct RecordHypothesis {
  std::string text;
  std::optional<double> model_score;
  std::optional<double> f;                  // VERNet sentence score
  std::vector<double> token_probs;          // P(y=1), hypothesis tokens + final [SEP]
  std::optional<double> ged_f;              // baseline heads, when enabled
  std::optional<double> gqe;
  std::optional<double> qe;
  std::optional<double> rank_score;
};

struct DatasetRecord {
  std::string source;
  std::vector<std::string> gold;  // zero or more references
  std::vector<RecordHypothesis> hypotheses;
  std::vector<double> gamma;                // node selection attention, after scoring
  std::vector<double> source_token_probs;   // P(y=1), source tokens + source [SEP]
};

std::string record_to_json_line(const DatasetRecord& record);
DatasetRecord record_from_json_line(const std::string& line);

// Throws with the 1-based line number on malformed input.
std::vector<DatasetRecord> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<DatasetRecord>& records);

HypothesisGroup to_group(const DatasetRecord& record, bool lowercase = false);
DatasetRecord from_group(const HypothesisGroup& group);

}  // namespace vernet

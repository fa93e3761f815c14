#include "vernet/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace vernet {

using nlohmann::json;

std::string record_to_json_line(const DatasetRecord& record) {
  json j;
  j["source"] = record.source;
  if (!record.gold.empty()) {
    if (record.gold.size() == 1)
      j["gold"] = record.gold.front();
    else
      j["gold"] = record.gold;
  }
  json hyps = json::array();
  for (const RecordHypothesis& h : record.hypotheses) {
    json jh;
    jh["text"] = h.text;
    if (h.model_score) jh["model_score"] = *h.model_score;
    if (h.f) jh["f"] = *h.f;
    if (!h.token_probs.empty()) jh["token_probs"] = h.token_probs;
    if (h.ged_f) jh["ged_f"] = *h.ged_f;
    if (h.gqe) jh["gqe"] = *h.gqe;
    if (h.qe) jh["qe"] = *h.qe;
    if (h.rank_score) jh["rank_score"] = *h.rank_score;
    hyps.push_back(std::move(jh));
  }
  j["hypotheses"] = std::move(hyps);
  if (!record.gamma.empty()) j["gamma"] = record.gamma;
  if (!record.source_token_probs.empty()) j["source_token_probs"] = record.source_token_probs;
  return j.dump();
}

DatasetRecord record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  DatasetRecord record;
  record.source = j.at("source").get<std::string>();
  if (j.contains("gold")) {
    if (j["gold"].is_string())
      record.gold.push_back(j["gold"].get<std::string>());
    else
      for (const json& g : j["gold"]) record.gold.push_back(g.get<std::string>());
  }
  if (j.contains("hypotheses"))
    for (const json& jh : j["hypotheses"]) {
      RecordHypothesis h;
      h.text = jh.at("text").get<std::string>();
      if (jh.contains("model_score")) h.model_score = jh["model_score"].get<double>();
      if (jh.contains("f")) h.f = jh["f"].get<double>();
      if (jh.contains("token_probs")) h.token_probs = jh["token_probs"].get<std::vector<double>>();
      if (jh.contains("ged_f")) h.ged_f = jh["ged_f"].get<double>();
      if (jh.contains("gqe")) h.gqe = jh["gqe"].get<double>();
      if (jh.contains("qe")) h.qe = jh["qe"].get<double>();
      if (jh.contains("rank_score")) h.rank_score = jh["rank_score"].get<double>();
      record.hypotheses.push_back(std::move(h));
    }
  if (j.contains("gamma")) record.gamma = j["gamma"].get<std::vector<double>>();
  if (j.contains("source_token_probs"))
    record.source_token_probs = j["source_token_probs"].get<std::vector<double>>();
  return record;
}

std::vector<DatasetRecord> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("dataset: cannot read " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    }
  }
  return records;
}

void write_jsonl(const std::string& path, const std::vector<DatasetRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dataset: cannot write " + path);
  for (const DatasetRecord& r : records) os << record_to_json_line(r) << '\n';
}

HypothesisGroup to_group(const DatasetRecord& record, bool lowercase) {
  HypothesisGroup group;
  group.source = tokenize(record.source, lowercase);
  for (const RecordHypothesis& h : record.hypotheses)
    group.hypotheses.push_back(Hypothesis{tokenize(h.text, lowercase), h.model_score});
  for (const std::string& g : record.gold) group.references.push_back(tokenize(g, lowercase));
  return group;
}

DatasetRecord from_group(const HypothesisGroup& group) {
  DatasetRecord record;
  record.source = join_tokens(group.source);
  for (const TokenList& ref : group.references) record.gold.push_back(join_tokens(ref));
  for (const Hypothesis& h : group.hypotheses) {
    RecordHypothesis rh;
    rh.text = join_tokens(h.tokens);
    rh.model_score = h.model_score;
    record.hypotheses.push_back(std::move(rh));
  }
  return record;
}

}  // namespace vernet

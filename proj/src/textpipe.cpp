#include "vernet/textpipe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "vernet/util.hpp"

namespace vernet {

TokenList tokenize(const std::string& text, bool lowercase) {
  TokenList out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(ch)))
                              : ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary Vocabulary::build(const std::vector<TokenList>& corpus, int min_count) {
  if (corpus.empty()) throw std::runtime_error("build_vocab: empty corpus");
  std::unordered_map<std::string, long> counts;
  for (const TokenList& sent : corpus)
    for (const std::string& tok : sent) ++counts[tok];

  std::vector<std::pair<std::string, long>> kept;
  kept.reserve(counts.size());
  for (auto& kv : counts)
    if (kv.second >= min_count) kept.emplace_back(kv.first, kv.second);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (auto& kv : kept) {
    v.token_to_id_[kv.first] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(kv.first);
  }
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocabulary: id out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const TokenList& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& tok : tokens) ids.push_back(id_of(tok));
  return ids;
}

TokenList Vocabulary::decode(const std::vector<int>& ids) const {
  TokenList out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token_of(id));
  return out;
}

std::string Vocabulary::serialize() const {
  std::ostringstream os;
  for (int id = 4; id < size(); ++id) os << id_to_token_[static_cast<std::size_t>(id)] << '\t' << id << '\n';
  return os.str();
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  Vocabulary v;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("vocabulary: malformed line: " + line);
    std::string tok = line.substr(0, tab);
    int id = std::stoi(line.substr(tab + 1));
    if (id != static_cast<int>(v.id_to_token_.size()))
      throw std::runtime_error("vocabulary: ids must be dense and in order");
    v.token_to_id_[tok] = id;
    v.id_to_token_.push_back(tok);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("vocabulary: cannot write " + path);
  os << serialize();
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("vocabulary: cannot read " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return deserialize(buf.str());
}

PairLayout encode_pair(const TokenList& source, const TokenList& hypothesis,
                       const Vocabulary& vocab, int max_tokens) {
  int m = static_cast<int>(source.size());
  int n = static_cast<int>(hypothesis.size());
  if (m + n > max_tokens) {
    const int excess = m + n - max_tokens;
    const int from_hyp = std::min(n, excess);
    n -= from_hyp;
    m -= (excess - from_hyp);
    log_info("encode_pair: truncated pair to m=" + std::to_string(m) + " n=" + std::to_string(n));
  }
  PairLayout layout;
  layout.m = m;
  layout.n = n;
  layout.ids.reserve(static_cast<std::size_t>(m + n + 3));
  layout.ids.push_back(Vocabulary::kCls);
  for (int i = 0; i < m; ++i) layout.ids.push_back(vocab.id_of(source[static_cast<std::size_t>(i)]));
  layout.ids.push_back(Vocabulary::kSep);
  for (int j = 0; j < n; ++j)
    layout.ids.push_back(vocab.id_of(hypothesis[static_cast<std::size_t>(j)]));
  layout.ids.push_back(Vocabulary::kSep);
  return layout;
}

}  // namespace vernet

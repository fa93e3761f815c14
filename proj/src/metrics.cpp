#include "vernet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace vernet {

double f_beta_score(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

PRF prf_from_counts(long tp, long fp, long fn, double beta) {
  PRF out;
  out.tp = tp;
  out.fp = fp;
  out.fn = fn;
  out.precision = (tp + fp > 0) ? static_cast<double>(tp) / (tp + fp) : 0.0;
  out.recall = (tp + fn > 0) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  out.f_beta = f_beta_score(out.precision, out.recall, beta);
  return out;
}

PRF token_prf(const std::vector<std::vector<int>>& predicted,
              const std::vector<std::vector<int>>& gold) {
  if (predicted.size() != gold.size())
    throw std::runtime_error("token_prf: corpus sizes disagree");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < predicted.size(); ++s) {
    if (predicted[s].size() != gold[s].size())
      throw std::runtime_error("token_prf: sequence lengths disagree");
    for (std::size_t i = 0; i < predicted[s].size(); ++i) {
      const bool pred_pos = predicted[s][i] == 0;
      const bool gold_pos = gold[s][i] == 0;
      if (pred_pos && gold_pos)
        ++tp;
      else if (pred_pos)
        ++fp;
      else if (gold_pos)
        ++fn;
    }
  }
  return prf_from_counts(tp, fp, fn);
}

namespace {

long match_count(const std::vector<Edit>& system_edits, const std::vector<Edit>& gold_edits) {
  // edits are sorted and non-overlapping, so multiset matching reduces to
  // counting equal pairs
  long tp = 0;
  std::vector<bool> used(gold_edits.size(), false);
  for (const Edit& se : system_edits)
    for (std::size_t g = 0; g < gold_edits.size(); ++g)
      if (!used[g] && se == gold_edits[g]) {
        used[g] = true;
        ++tp;
        break;
      }
  return tp;
}

}  // namespace

PRF span_prf(const std::vector<std::vector<Edit>>& system_edits,
             const std::vector<std::vector<std::vector<Edit>>>& gold_edit_sets) {
  if (system_edits.size() != gold_edit_sets.size())
    throw std::runtime_error("span_prf: corpus sizes disagree");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < system_edits.size(); ++s) {
    if (gold_edit_sets[s].empty()) throw std::runtime_error("span_prf: sentence without gold");
    long best_tp = 0, best_fp = 0, best_fn = 0;
    double best_f = -1.0;
    for (const std::vector<Edit>& gold : gold_edit_sets[s]) {
      const long stp = match_count(system_edits[s], gold);
      const long sfp = static_cast<long>(system_edits[s].size()) - stp;
      const long sfn = static_cast<long>(gold.size()) - stp;
      const double f = prf_from_counts(stp, sfp, sfn).f_beta;
      if (f > best_f) {
        best_f = f;
        best_tp = stp;
        best_fp = sfp;
        best_fn = sfn;
      }
    }
    tp += best_tp;
    fp += best_fp;
    fn += best_fn;
  }
  return prf_from_counts(tp, fp, fn);
}

double sentence_f05(const std::vector<Edit>& system_edits, const std::vector<Edit>& gold_edits) {
  if (system_edits.empty() && gold_edits.empty()) return 1.0;
  const long tp = match_count(system_edits, gold_edits);
  return prf_from_counts(tp, static_cast<long>(system_edits.size()) - tp,
                         static_cast<long>(gold_edits.size()) - tp)
      .f_beta;
}

double sentence_f05_multi(const std::vector<Edit>& system_edits,
                          const std::vector<std::vector<Edit>>& gold_edit_sets) {
  double best = 0.0;
  bool first = true;
  for (const std::vector<Edit>& gold : gold_edit_sets) {
    const double f = sentence_f05(system_edits, gold);
    if (first || f > best) best = f;
    first = false;
  }
  return best;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, long>;

NgramCounts ngrams(const TokenList& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                      tokens.begin() + static_cast<long>(i) + n)];
  return counts;
}

double gleu_one_reference(const TokenList& candidate, const TokenList& source,
                          const TokenList& reference, int max_n) {
  double log_sum = 0.0;
  int levels = 0;
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts cand = ngrams(candidate, n);
    if (cand.empty()) continue;  // candidate too short for this order
    const NgramCounts ref = ngrams(reference, n);
    const NgramCounts src = ngrams(source, n);
    long total = 0, matches = 0, penalty = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto rit = ref.find(gram);
      const long ref_count = rit == ref.end() ? 0 : rit->second;
      matches += std::min(count, ref_count);
      auto sit = src.find(gram);
      if (sit != src.end()) {
        const long source_only = std::max(0L, sit->second - ref_count);
        penalty += std::min(count, source_only);
      }
    }
    const long numer = std::max(0L, matches - penalty);
    ++levels;
    if (numer == 0) return 0.0;  // geometric mean collapses
    log_sum += std::log(static_cast<double>(numer) / static_cast<double>(total));
  }
  if (levels == 0) return 0.0;
  const double bp =
      std::min(1.0, std::exp(1.0 - static_cast<double>(reference.size()) /
                                       static_cast<double>(candidate.size())));
  return bp * std::exp(log_sum / levels);
}

}  // namespace

double gleu(const TokenList& candidate, const TokenList& source,
            const std::vector<TokenList>& references, int max_n) {
  if (references.empty()) throw std::runtime_error("gleu: at least one reference required");
  if (candidate.empty()) return 0.0;
  double acc = 0.0;
  for (const TokenList& ref : references)
    acc += gleu_one_reference(candidate, source, ref, max_n);
  return acc / static_cast<double>(references.size());
}

double corpus_gleu(const std::vector<TokenList>& candidates, const std::vector<TokenList>& sources,
                   const std::vector<std::vector<TokenList>>& references, int max_n) {
  if (candidates.size() != sources.size() || candidates.size() != references.size())
    throw std::runtime_error("corpus_gleu: corpus sizes disagree");
  if (candidates.empty()) throw std::runtime_error("corpus_gleu: empty corpus");
  double acc = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    acc += gleu(candidates[i], sources[i], references[i], max_n);
  return acc / static_cast<double>(candidates.size());
}

double pcc(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::runtime_error("pcc: lengths disagree");
  if (x.size() < 2) throw std::runtime_error("pcc: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::runtime_error("pcc: correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace vernet

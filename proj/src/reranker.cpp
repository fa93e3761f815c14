#include "vernet/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "vernet/util.hpp"

namespace vernet {

void RankerWeights::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("ranker weights: cannot write " + path);
  for (std::size_t i = 0; i < weights.size(); ++i)
    os << feature_names[i] << '\t' << format_double(weights[i]) << '\n';
}

RankerWeights RankerWeights::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("ranker weights: cannot read " + path);
  RankerWeights out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("ranker weights: malformed line: " + line);
    out.feature_names.push_back(line.substr(0, tab));
    out.weights.push_back(std::strtod(line.c_str() + tab + 1, nullptr));
  }
  return out;
}

namespace {

int arg_top1(const std::vector<std::vector<double>>& features, const std::vector<double>& weights) {
  int best = 0;
  double best_score = 0.0;
  for (std::size_t k = 0; k < features.size(); ++k) {
    double score = 0.0;
    for (std::size_t f = 0; f < weights.size(); ++f) score += weights[f] * features[k][f];
    if (k == 0 || score > best_score) {
      best = static_cast<int>(k);
      best_score = score;
    }
  }
  return best;
}

}  // namespace

double rank_objective(const std::vector<RankingGroup>& groups, const std::vector<double>& weights,
                      bool binary_p_at_1) {
  if (groups.empty()) throw std::runtime_error("rank_objective: no groups");
  double acc = 0.0;
  for (const RankingGroup& group : groups) {
    const int top = arg_top1(group.features, weights);
    if (binary_p_at_1) {
      const double best_f = *std::max_element(group.gold_f05.begin(), group.gold_f05.end());
      acc += (group.gold_f05[static_cast<std::size_t>(top)] >= best_f) ? 1.0 : 0.0;
    } else {
      acc += group.gold_f05[static_cast<std::size_t>(top)];
    }
  }
  return acc / static_cast<double>(groups.size());
}

std::vector<int> rank_order(const std::vector<std::vector<double>>& features,
                            const std::vector<double>& weights) {
  std::vector<int> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> scores(features.size(), 0.0);
  for (std::size_t k = 0; k < features.size(); ++k)
    for (std::size_t f = 0; f < weights.size(); ++f)
      scores[k] += weights[f] * features[k][f];
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[static_cast<std::size_t>(a)] >
                                              scores[static_cast<std::size_t>(b)]; });
  return order;
}

CoordinateAscentResult coordinate_ascent(const std::vector<RankingGroup>& groups,
                                         const std::vector<std::string>& feature_names,
                                         const CoordinateAscentConfig& config) {
  if (groups.empty()) throw std::runtime_error("coordinate_ascent: no groups");
  const std::size_t n_features = feature_names.size();
  for (const RankingGroup& group : groups) {
    if (group.features.empty() || group.gold_f05.size() != group.features.size())
      throw std::runtime_error("coordinate_ascent: groups need features and gold F0.5");
    for (const auto& row : group.features)
      if (row.size() != n_features)
        throw std::runtime_error("coordinate_ascent: feature arity mismatch");
  }

  CoordinateAscentResult result;
  result.weights.feature_names = feature_names;

  // no ranking signal at all: uniform weights, caller warned via flag
  bool any_signal = false;
  for (const RankingGroup& group : groups) {
    for (double f : group.gold_f05)
      if (f != group.gold_f05.front()) {
        any_signal = true;
        break;
      }
    if (any_signal) break;
  }
  if (!any_signal) {
    log_warn("coordinate_ascent: every group fully tied; returning uniform weights");
    result.degenerate = true;
    result.weights.weights.assign(n_features, 1.0 / static_cast<double>(n_features));
    result.objective = rank_objective(groups, result.weights.weights, config.binary_p_at_1);
    return result;
  }

  // standardize features; learned weights are folded back through the scale
  // at the end (the mean shift is constant within a group, so ranking is
  // unaffected by dropping it)
  std::vector<double> mean(n_features, 0.0), stddev(n_features, 0.0);
  long count = 0;
  for (const RankingGroup& group : groups)
    for (const auto& row : group.features) {
      for (std::size_t f = 0; f < n_features; ++f) mean[f] += row[f];
      ++count;
    }
  for (std::size_t f = 0; f < n_features; ++f) mean[f] /= static_cast<double>(count);
  for (const RankingGroup& group : groups)
    for (const auto& row : group.features)
      for (std::size_t f = 0; f < n_features; ++f)
        stddev[f] += (row[f] - mean[f]) * (row[f] - mean[f]);
  for (std::size_t f = 0; f < n_features; ++f) {
    stddev[f] = std::sqrt(stddev[f] / static_cast<double>(count));
    if (stddev[f] == 0.0) stddev[f] = 1.0;  // constant feature: cannot affect ranking
  }
  std::vector<RankingGroup> scaled = groups;
  for (RankingGroup& group : scaled)
    for (auto& row : group.features)
      for (std::size_t f = 0; f < n_features; ++f) row[f] = (row[f] - mean[f]) / stddev[f];

  auto objective = [&](const std::vector<double>& w) {
    return rank_objective(scaled, w, config.binary_p_at_1);
  };

  std::vector<double> best_weights;
  double best_objective = -1.0;
  std::vector<double> best_trace;
  Rng rng(config.seed);

  for (int restart = 0; restart < config.restarts; ++restart) {
    std::vector<double> w(n_features, 0.0);
    if (restart == 0) {
      w[0] = 1.0;  // first-feature-only start; the decoder-score baseline when present
    } else if (restart == 1) {
      w.assign(n_features, 1.0 / static_cast<double>(n_features));
    } else {
      for (double& v : w) v = rng.uniform(-1.0, 1.0);
    }
    double obj = objective(w);
    std::vector<double> trace{obj};

    for (int pass = 0; pass < config.max_passes; ++pass) {
      bool improved = false;
      for (std::size_t f = 0; f < n_features; ++f) {
        double best_cand_obj = obj;
        double best_cand_value = w[f];
        auto consider = [&](double value) {
          if (value == w[f]) return;
          std::vector<double> cand = w;
          cand[f] = value;
          const double cand_obj = objective(cand);
          if (cand_obj > best_cand_obj) {
            best_cand_obj = cand_obj;
            best_cand_value = value;
          }
        };
        for (int t = 0; t <= config.levels; ++t) {
          const double step = config.delta * std::pow(2.0, t);
          consider(w[f] + step);
          consider(w[f] - step);
        }
        consider(-w[f]);
        if (best_cand_obj > obj) {  // strict improvements only
          w[f] = best_cand_value;
          obj = best_cand_obj;
          trace.push_back(obj);
          improved = true;
        }
      }
      if (!improved) break;
    }

    if (obj > best_objective) {
      best_objective = obj;
      best_weights = w;
      best_trace = trace;
    }
  }

  // fold the standardization scale into the weights and L1-normalize
  for (std::size_t f = 0; f < n_features; ++f) best_weights[f] /= stddev[f];
  double l1 = 0.0;
  for (double v : best_weights) l1 += std::abs(v);
  if (l1 > 0.0)
    for (double& v : best_weights) v /= l1;
  else
    best_weights.assign(n_features, 1.0 / static_cast<double>(n_features));

  result.weights.weights = best_weights;
  result.objective = best_objective;
  result.accepted_trace = best_trace;
  return result;
}

}  // namespace vernet

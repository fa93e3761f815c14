#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vernet {

// One group's ranking instance: a feature row per hypothesis plus, when
// learning, the gold sentence F0.5 of each hypothesis.
struct RankingGroup {
  std::vector<std::vector<double>> features;  // K x F
  std::vector<double> gold_f05;               // K (empty when unlabeled)
};

// Linear weights, L1-normalized on output (ranking is scale-invariant).
struct RankerWeights {
  std::vector<std::string> feature_names;
  std::vector<double> weights;

  void save(const std::string& path) const;
  static RankerWeights load(const std::string& path);
};

struct CoordinateAscentConfig {
  int restarts = 5;
  double delta = 0.05;  // base line-search step
  int levels = 6;       // tries w +- delta * 2^t for t = 0..levels
  int max_passes = 100;
  std::uint64_t seed = 1;
  // optimize binary precision-at-1 over highest-F0.5 positives instead of
  // the continuous top-1 gold F0.5
  bool binary_p_at_1 = false;
};

struct CoordinateAscentResult {
  RankerWeights weights;
  double objective = 0.0;
  // objective after every accepted step of the winning restart; strictly
  // increasing by construction
  std::vector<double> accepted_trace;
  bool degenerate = false;  // every group fully tied; weights fell back to uniform
};

// Mean over groups of the gold F0.5 of the top-1 hypothesis under the
// linear score (ties keep the earlier hypothesis).
double rank_objective(const std::vector<RankingGroup>& groups, const std::vector<double>& weights,
                      bool binary_p_at_1 = false);

// Greedy per-coordinate line search accepting only strict improvements,
// cycling until a full pass yields no gain; several restarts, best wins.
// Features are standardized internally; the returned weights are folded back
// so they apply to raw feature values.
CoordinateAscentResult coordinate_ascent(const std::vector<RankingGroup>& groups,
                                         const std::vector<std::string>& feature_names,
                                         const CoordinateAscentConfig& config);

// Hypothesis order (indices, best first) under the linear score; ties keep
// the original beam order.
std::vector<int> rank_order(const std::vector<std::vector<double>>& features,
                            const std::vector<double>& weights);

}  // namespace vernet

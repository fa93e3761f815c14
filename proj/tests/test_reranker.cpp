#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vernet/reranker.hpp"
#include "vernet/util.hpp"

using namespace vernet;

namespace {

// groups where the first feature is the gold score itself and the second is
// pure noise
std::vector<RankingGroup> oracle_noise_groups(int count, int k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RankingGroup> groups;
  for (int g = 0; g < count; ++g) {
    RankingGroup group;
    for (int i = 0; i < k; ++i) {
      const double gold = rng.uniform();
      group.gold_f05.push_back(gold);
      group.features.push_back({gold, rng.uniform(-1.0, 1.0)});
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

double best_attainable(const std::vector<RankingGroup>& groups) {
  double acc = 0.0;
  for (const RankingGroup& g : groups)
    acc += *std::max_element(g.gold_f05.begin(), g.gold_f05.end());
  return acc / static_cast<double>(groups.size());
}

}  // namespace

TEST_SUITE_BEGIN("reranker");

TEST_CASE("a feature equal to gold learns a positive weight and tops out") {
  const std::vector<RankingGroup> groups = oracle_noise_groups(60, 4, 3);
  CoordinateAscentConfig config;
  const CoordinateAscentResult result =
      coordinate_ascent(groups, {"oracle", "noise"}, config);
  CHECK(result.weights.weights[0] > 0.0);
  CHECK(result.objective == doctest::Approx(best_attainable(groups)).epsilon(1e-12));
  // the learned weights reproduce the reported objective on raw features
  CHECK(rank_objective(groups, result.weights.weights) ==
        doctest::Approx(result.objective).epsilon(1e-12));
}

TEST_CASE("coordinate ascent matches an exhaustive grid") {
  const std::vector<RankingGroup> groups = oracle_noise_groups(40, 5, 9);
  CoordinateAscentConfig config;
  const CoordinateAscentResult result =
      coordinate_ascent(groups, {"oracle", "noise"}, config);

  double grid_best = -1.0;
  for (int a = -20; a <= 20; ++a)
    for (int b = -20; b <= 20; ++b) {
      if (a == 0 && b == 0) continue;
      grid_best = std::max(
          grid_best, rank_objective(groups, {0.05 * a, 0.05 * b}));
    }
  CHECK(std::abs(result.objective - grid_best) <= 1e-9);
}

TEST_CASE("accepted steps strictly improve the objective") {
  const std::vector<RankingGroup> groups = oracle_noise_groups(30, 4, 12);
  CoordinateAscentConfig config;
  const CoordinateAscentResult result = coordinate_ascent(groups, {"oracle", "noise"}, config);
  REQUIRE(!result.accepted_trace.empty());
  for (std::size_t i = 1; i < result.accepted_trace.size(); ++i)
    CHECK(result.accepted_trace[i] > result.accepted_trace[i - 1]);
  CHECK(result.objective >= result.accepted_trace.front());
}

TEST_CASE("weights are L1-normalized and deterministic") {
  const std::vector<RankingGroup> groups = oracle_noise_groups(30, 4, 15);
  CoordinateAscentConfig config;
  const CoordinateAscentResult a = coordinate_ascent(groups, {"x", "y"}, config);
  const CoordinateAscentResult b = coordinate_ascent(groups, {"x", "y"}, config);
  CHECK(a.weights.weights == b.weights.weights);
  double l1 = 0.0;
  for (double w : a.weights.weights) l1 += std::abs(w);
  CHECK(l1 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fully tied groups fall back to uniform weights") {
  std::vector<RankingGroup> tied;
  for (int g = 0; g < 5; ++g) {
    RankingGroup group;
    for (int k = 0; k < 3; ++k) {
      group.gold_f05.push_back(0.5);
      group.features.push_back({static_cast<double>(k), 1.0});
    }
    tied.push_back(std::move(group));
  }
  const CoordinateAscentResult result = coordinate_ascent(tied, {"a", "b"}, {});
  CHECK(result.degenerate);
  CHECK(result.weights.weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("rank order basics") {
  // K=1 is the identity
  CHECK(rank_order({{0.3, 0.4}}, {1.0, 1.0}) == std::vector<int>{0});

  const std::vector<std::vector<double>> features{{0.9, 0.2}, {0.1, 0.8}};
  CHECK(rank_order(features, {1.0, 0.0}) == std::vector<int>{0, 1});
  CHECK(rank_order(features, {0.0, 1.0}) == std::vector<int>{1, 0});

  // positive rescaling never changes the order
  Rng rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < 5; ++k) rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    const std::vector<double> w{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                rng.uniform(-1.0, 1.0)};
    std::vector<double> scaled = w;
    for (double& v : scaled) v *= 7.25;
    CHECK(rank_order(rows, w) == rank_order(rows, scaled));
  }

  // ties keep the original beam order
  CHECK(rank_order({{1.0}, {1.0}, {1.0}}, {1.0}) == std::vector<int>{0, 1, 2});
}

TEST_CASE("zero weight on the model score reproduces the decoder order") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> features;
    double score = 5.0;
    for (int k = 0; k < 6; ++k) {
      score -= 0.1 + rng.uniform();  // strictly decreasing decoder scores
      features.push_back({score, rng.uniform()});
    }
    const std::vector<int> order = rank_order(features, {1.0, 0.0});
    for (int k = 0; k < 6; ++k) CHECK(order[static_cast<std::size_t>(k)] == k);
  }
}

TEST_CASE("weights persist as name-tab-value lines") {
  RankerWeights weights;
  weights.feature_names = {"model_score", "vernet_f"};
  weights.weights = {0.75, -0.25};
  const std::string path = "weights_test.tsv";
  weights.save(path);
  const RankerWeights loaded = RankerWeights::load(path);
  CHECK(loaded.feature_names == weights.feature_names);
  CHECK(loaded.weights == weights.weights);
  std::remove(path.c_str());
}

TEST_SUITE_END();

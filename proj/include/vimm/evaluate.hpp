#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/metrics.hpp"
#include "vimm/model.hpp"
#include "vimm/parallel.hpp"
#include "vimm/rng.hpp"
#include "vimm/split.hpp"

namespace vimm {

struct RankingMetrics {
  std::size_t k = 10;
  double recall = 0.0;  // mean over evaluated users
  double ndcg = 0.0;
  std::vector<std::uint32_t> users;  // users with at least one held-out item, ascending
  std::vector<double> user_recall;
  std::vector<double> user_ndcg;
};

namespace detail {

inline std::vector<std::vector<std::uint32_t>> group_by_user(
    std::size_t user_count, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  std::vector<std::vector<std::uint32_t>> per_user(user_count);
  for (const auto& [u, i] : pairs) {
    require(u < user_count, "held-out pair user out of range");
    per_user[u].push_back(i);
  }
  for (auto& items : per_user) std::sort(items.begin(), items.end());
  return per_user;
}

}  // namespace detail

// Mean Recall@K / NDCG@K over users that have at least one held-out
// item. Candidates are all items minus the user's row in `exclusions`
// (the training positives). Pure function of its inputs; per-user work
// is parallel with the mean taken in ascending user order.
inline RankingMetrics evaluate(const EmbeddingModel& model, const InteractionMatrix& exclusions,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& heldout,
                               std::size_t k, unsigned workers = 1) {
  require(exclusions.user_count() == model.user_count() &&
              exclusions.item_count() == model.item_count(),
          "evaluate: exclusion matrix shape mismatch");
  require(k >= 1, "evaluate: k must be >= 1");
  const auto per_user = detail::group_by_user(model.user_count(), heldout);

  RankingMetrics out;
  out.k = k;
  for (std::uint32_t u = 0; u < model.user_count(); ++u)
    if (!per_user[u].empty()) out.users.push_back(u);
  out.user_recall.assign(out.users.size(), 0.0);
  out.user_ndcg.assign(out.users.size(), 0.0);

  parallel_for(out.users.size(), workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores;
    std::vector<std::uint32_t> exclude;
    for (std::size_t s = begin; s < end; ++s) {
      const std::uint32_t u = out.users[s];
      exclude.clear();
      for (std::size_t e = exclusions.row_begin(u); e < exclusions.row_end(u); ++e)
        exclude.push_back(exclusions.entry_item(e));
      model.score_user(u, scores);
      const auto ranked = rank_scores(scores, exclude);
      out.user_recall[s] = recall_at_k(ranked, per_user[u], k);
      out.user_ndcg[s] = ndcg_at_k(ranked, per_user[u], k);
    }
  });

  if (!out.users.empty()) {
    double r = 0.0, n = 0.0;
    for (std::size_t s = 0; s < out.users.size(); ++s) {
      r += out.user_recall[s];
      n += out.user_ndcg[s];
    }
    out.recall = r / static_cast<double>(out.users.size());
    out.ndcg = n / static_cast<double>(out.users.size());
  }
  return out;
}

struct SparsityGroup {
  std::string label;
  std::size_t lo = 0;  // inclusive training-interaction bounds; hi 0 = unbounded
  std::size_t hi = 0;
  RankingMetrics metrics;
};

// Users bucketed by training interaction count with upper boundaries
// like {5, 10, 20} -> [..5], [6..10], [11..20], [21+]. Empty buckets are
// omitted. Buckets partition the evaluated users.
inline std::vector<SparsityGroup> sparsity_group_eval(
    const EmbeddingModel& model, const SplitBundle& split,
    const std::vector<std::size_t>& boundaries, std::size_t k, unsigned workers = 1) {
  require(!boundaries.empty(), "sparsity_group_eval: no boundaries");
  for (std::size_t b = 1; b < boundaries.size(); ++b)
    require(boundaries[b] > boundaries[b - 1],
            "sparsity_group_eval: boundaries must be strictly increasing");

  const std::size_t bucket_count = boundaries.size() + 1;
  const auto bucket_of = [&](std::size_t count) {
    for (std::size_t b = 0; b < boundaries.size(); ++b)
      if (count <= boundaries[b]) return b;
    return boundaries.size();
  };

  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> held(bucket_count);
  for (const auto& pair : split.test) {
    const std::uint32_t u = pair.first;
    const std::size_t count = split.train.row_end(u) - split.train.row_begin(u);
    held[bucket_of(count)].push_back(pair);
  }

  std::vector<SparsityGroup> out;
  for (std::size_t b = 0; b < bucket_count; ++b) {
    if (held[b].empty()) continue;
    SparsityGroup g;
    g.lo = b == 0 ? 1 : boundaries[b - 1] + 1;
    g.hi = b < boundaries.size() ? boundaries[b] : 0;
    g.label = g.hi == 0 ? std::to_string(g.lo) + "+"
                        : std::to_string(g.lo) + "-" + std::to_string(g.hi);
    g.metrics = evaluate(model, split.train, held[b], k, workers);
    out.push_back(std::move(g));
  }
  return out;
}

// Item-holdout cold-start protocol: a random item subset loses ALL of
// its interactions from training (modality features stay available);
// every interaction touching a held item becomes test data. The
// remaining interactions give train plus a validation slice for early
// stopping. Users left without training interactions stay in the matrix
// with empty rows; they never get sampled and propagate zero vectors.
struct ColdStartSplit {
  std::vector<std::uint32_t> held_items;  // sorted
  InteractionMatrix train;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> validation;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> test;
  std::uint64_t seed = 0;
};

inline ColdStartSplit make_cold_start_split(const Dataset& ds, double holdout_fraction,
                                            const SplitRatios& ratios, std::uint64_t seed) {
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "make_cold_start_split: holdout fraction must be in [0,1)");
  ColdStartSplit out;
  out.seed = seed;
  if (holdout_fraction == 0.0) {
    SplitBundle s = split_dataset(ds, ratios, seed);
    out.train = std::move(s.train);
    out.validation = std::move(s.validation);
    out.test = std::move(s.test);
    return out;
  }

  std::size_t held = static_cast<std::size_t>(
      std::floor(holdout_fraction * static_cast<double>(ds.item_count)));
  held = std::clamp<std::size_t>(held, 1, ds.item_count - 1);
  std::vector<std::uint32_t> items(ds.item_count);
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = static_cast<std::uint32_t>(i);
  Rng rng = Rng::substream(seed, 101, 0);
  rng.shuffle(items);
  out.held_items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(held));
  std::sort(out.held_items.begin(), out.held_items.end());

  std::vector<std::pair<std::uint32_t, std::uint32_t>> remaining;
  for (const auto& pair : ds.interactions) {
    if (std::binary_search(out.held_items.begin(), out.held_items.end(), pair.second))
      out.test.push_back(pair);
    else
      remaining.push_back(pair);
  }
  std::sort(out.test.begin(), out.test.end());
  require(!remaining.empty(), "make_cold_start_split: holdout removed every interaction");

  const double keep = ratios.train + ratios.validation;
  require(keep > 0.0, "make_cold_start_split: degenerate ratios");
  SplitRatios reduced{ratios.train / keep, ratios.validation / keep, 0.0};
  SplitBundle s =
      split_pairs(ds.user_count, ds.item_count, remaining, reduced, seed, true);
  out.train = std::move(s.train);
  out.validation = std::move(s.validation);
  return out;
}

// Runs a caller-supplied training pipeline on the reduced graph and
// scores only the interactions that hit held-out items.
template <typename TrainFn>
inline RankingMetrics cold_start_eval(const Dataset& ds, double holdout_fraction,
                                      const SplitRatios& ratios, std::uint64_t seed,
                                      std::size_t k, unsigned workers, TrainFn&& train_fn) {
  const ColdStartSplit cs = make_cold_start_split(ds, holdout_fraction, ratios, seed);
  const EmbeddingModel model = train_fn(cs);
  return evaluate(model, cs.train, cs.test, k, workers);
}

}  // namespace vimm

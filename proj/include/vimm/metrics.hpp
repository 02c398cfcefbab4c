#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/model.hpp"

namespace vimm {

// Full ordering of the candidate items (every item not in the sorted
// exclusion list) by score descending, ties broken by ascending index.
inline std::vector<std::uint32_t> rank_scores(const std::vector<double>& scores,
                                              const std::vector<std::uint32_t>& exclude_sorted) {
  std::vector<std::uint32_t> candidates;
  candidates.reserve(scores.size());
  std::size_t e = 0;
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    if (e < exclude_sorted.size() && exclude_sorted[e] == i) {
      ++e;
      continue;
    }
    candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return candidates;
}

inline std::vector<std::uint32_t> rank_items(const EmbeddingModel& model, std::uint32_t user,
                                             const std::vector<std::uint32_t>& exclude_sorted) {
  std::vector<double> scores;
  model.score_user(user, scores);
  return rank_scores(scores, exclude_sorted);
}

// |top-K ∩ relevant| / |relevant|
inline double recall_at_k(const std::vector<std::uint32_t>& ranked,
                          const std::vector<std::uint32_t>& relevant_sorted, std::size_t k) {
  require(!relevant_sorted.empty(), "recall_at_k: empty relevant set");
  const std::size_t top = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top; ++r)
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(), ranked[r])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant_sorted.size());
}

// Binary relevance: DCG = Σ_{ hits at rank r (1-based) } 1/log2(r+1),
// ideal DCG fills the first min(|relevant|, K) ranks.
inline double ndcg_at_k(const std::vector<std::uint32_t>& ranked,
                        const std::vector<std::uint32_t>& relevant_sorted, std::size_t k) {
  require(!relevant_sorted.empty(), "ndcg_at_k: empty relevant set");
  const std::size_t top = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < top; ++r)
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(), ranked[r]))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  const std::size_t ideal = std::min(relevant_sorted.size(), k);
  double idcg = 0.0;
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

}  // namespace vimm

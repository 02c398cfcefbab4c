#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/rng.hpp"

namespace vimm {

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitBundle {
  InteractionMatrix train;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> validation;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> test;
  std::uint64_t seed = 0;
};

// Per-user shuffled split over an explicit pair list. Users with fewer
// than 3 interactions keep everything in train; otherwise boundaries are
// cumulative floors of the ratios with at least one training interaction
// guaranteed. With allow_empty_users, users without pairs simply
// contribute nothing (used by the cold-start protocol).
inline SplitBundle split_pairs(std::size_t user_count, std::size_t item_count,
                               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
                               const SplitRatios& ratios, std::uint64_t seed,
                               bool allow_empty_users = false) {
  require(std::abs(ratios.train + ratios.validation + ratios.test - 1.0) <= 1e-9,
          "split_pairs: ratios must sum to 1");
  require(ratios.train > 0.0 && ratios.validation >= 0.0 && ratios.test >= 0.0,
          "split_pairs: ratios must be nonnegative with positive train share");

  std::vector<std::vector<std::uint32_t>> per_user(user_count);
  for (const auto& [u, i] : pairs) {
    require(u < user_count && i < item_count, "split_pairs: pair out of range");
    per_user[u].push_back(i);
  }
  if (!allow_empty_users)
    for (std::size_t u = 0; u < user_count; ++u)
      require(!per_user[u].empty(),
              "split_pairs: user " + std::to_string(u) + " has no interactions");

  SplitBundle out;
  out.seed = seed;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> train_pairs;
  for (std::size_t u = 0; u < user_count; ++u) {
    auto& items = per_user[u];
    if (items.empty()) continue;
    std::sort(items.begin(), items.end());
    Rng rng = Rng::substream(seed, 41, u);
    rng.shuffle(items);
    const std::size_t n = items.size();
    std::size_t b1 = n, b2 = n;
    if (n >= 3) {
      b1 = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.train)));
      b2 = static_cast<std::size_t>(
          std::floor(static_cast<double>(n) * (ratios.train + ratios.validation)));
      b2 = std::clamp(b2, b1, n);
    }
    const auto uu = static_cast<std::uint32_t>(u);
    for (std::size_t j = 0; j < b1; ++j) train_pairs.emplace_back(uu, items[j]);
    for (std::size_t j = b1; j < b2; ++j) out.validation.emplace_back(uu, items[j]);
    for (std::size_t j = b2; j < n; ++j) out.test.emplace_back(uu, items[j]);
  }
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  out.train = InteractionMatrix::from_pairs(user_count, item_count, train_pairs);
  return out;
}

inline SplitBundle split_dataset(const Dataset& ds, const SplitRatios& ratios,
                                 std::uint64_t seed) {
  return split_pairs(ds.user_count, ds.item_count, ds.interactions, ratios, seed, false);
}

}  // namespace vimm

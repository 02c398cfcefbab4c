#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/rng.hpp"

namespace vimm {

struct SyntheticConfig {
  std::size_t user_count = 300;
  std::size_t item_count = 500;
  std::size_t cluster_count = 8;
  std::size_t interactions_per_user = 10;
  std::map<std::string, std::size_t> modality_dims = {{"v", 16}, {"t", 24}};
  double affinity_noise = 0.1;
  // Per-modality override of affinity_noise. Modalities differing in
  // reliability are what make the statistical weights informative.
  std::map<std::string, double> modality_noise;
  std::uint64_t seed = 0;
  // Mixture weights for item draws: primary cluster, secondary cluster,
  // uniform remainder. Users keep fixed cluster preferences so that
  // modality similarity of interacted items predicts further preferences.
  double primary_mass = 0.65;
  double secondary_mass = 0.20;
  // Within a cluster, item popularity ~ exp(sharpness * sum over
  // modalities of cos(embedding, cluster center)): canonical exemplars
  // get picked more, in every modality at once. 0 restores the uniform
  // within-cluster draw.
  double typicality_sharpness = 8.0;
};

namespace detail {

inline void normalize_row(float* row, std::size_t dim) {
  double sq = 0.0;
  for (std::size_t d = 0; d < dim; ++d) sq += static_cast<double>(row[d]) * row[d];
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t d = 0; d < dim; ++d)
    row[d] = static_cast<float>(static_cast<double>(row[d]) * inv);
}

}  // namespace detail

// Clustered synthetic dataset. Items get cluster-centered unit-norm
// embeddings in every modality (one shared cluster assignment, separate
// centers per modality); each user draws distinct items mostly from one
// or two preferred clusters. Fully deterministic in the seed.
inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  require(cfg.user_count > 0, "generate_synthetic: user_count must be positive");
  require(cfg.item_count > 0, "generate_synthetic: item_count must be positive");
  require(cfg.cluster_count > 0, "generate_synthetic: cluster_count must be positive");
  require(cfg.cluster_count <= cfg.item_count,
          "generate_synthetic: cluster_count exceeds item_count");
  require(cfg.interactions_per_user > 0 && cfg.interactions_per_user <= cfg.item_count,
          "generate_synthetic: interactions_per_user must be in [1, item_count]");
  require(!cfg.modality_dims.empty(), "generate_synthetic: at least one modality required");
  require(cfg.affinity_noise >= 0.0, "generate_synthetic: affinity_noise must be >= 0");
  for (const auto& [name, noise] : cfg.modality_noise) {
    require(cfg.modality_dims.count(name) != 0,
            "generate_synthetic: modality_noise names unknown modality '" + name + "'");
    require(noise >= 0.0, "generate_synthetic: modality_noise must be >= 0");
  }

  Dataset ds;
  ds.user_count = cfg.user_count;
  ds.item_count = cfg.item_count;

  // Cluster assignment, shared across modalities.
  std::vector<std::uint32_t> cluster_of(cfg.item_count);
  {
    Rng rng = Rng::substream(cfg.seed, 11);
    for (std::size_t i = 0; i < cfg.item_count; ++i)
      cluster_of[i] = static_cast<std::uint32_t>(rng.uniform_index(cfg.cluster_count));
  }
  std::vector<std::vector<std::uint32_t>> cluster_items(cfg.cluster_count);
  for (std::size_t i = 0; i < cfg.item_count; ++i)
    cluster_items[cluster_of[i]].push_back(static_cast<std::uint32_t>(i));
  std::vector<std::uint32_t> nonempty_clusters;
  for (std::size_t c = 0; c < cfg.cluster_count; ++c)
    if (!cluster_items[c].empty()) nonempty_clusters.push_back(static_cast<std::uint32_t>(c));

  // Per-modality embeddings: unit-normalized cluster center plus scaled
  // Gaussian perturbation, then normalized again. Typicality tracks how
  // close each item stays to its centers across all modalities.
  std::vector<double> typicality(cfg.item_count, 0.0);
  std::uint64_t modality_index = 0;
  for (const auto& [name, dim] : cfg.modality_dims) {
    require(dim > 0, "generate_synthetic: modality '" + name + "' dim must be positive");
    const auto noise_it = cfg.modality_noise.find(name);
    const double noise =
        noise_it != cfg.modality_noise.end() ? noise_it->second : cfg.affinity_noise;
    Rng center_rng = Rng::substream(cfg.seed, 21, modality_index);
    std::vector<float> centers(cfg.cluster_count * dim);
    for (std::size_t c = 0; c < cfg.cluster_count; ++c) {
      float* row = centers.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<float>(center_rng.normal());
      detail::normalize_row(row, dim);
    }
    ModalityEmbeddings emb;
    emb.modality = name;
    emb.dim = dim;
    emb.item_count = cfg.item_count;
    emb.values.resize(cfg.item_count * dim);
    Rng noise_rng = Rng::substream(cfg.seed, 22, modality_index);
    for (std::size_t i = 0; i < cfg.item_count; ++i) {
      const float* center = centers.data() + cluster_of[i] * dim;
      float* row = emb.row(i);
      for (std::size_t d = 0; d < dim; ++d) {
        double v = center[d];
        if (noise > 0.0) v += noise * noise_rng.normal();
        row[d] = static_cast<float>(v);
      }
      detail::normalize_row(row, dim);
      double dot = 0.0;  // both rows are unit-norm
      for (std::size_t d = 0; d < dim; ++d) dot += static_cast<double>(row[d]) * center[d];
      typicality[i] += dot;
    }
    ds.modalities.emplace(name, std::move(emb));
    ++modality_index;
  }

  // Per-cluster cumulative popularity for the within-cluster draw.
  std::vector<std::vector<double>> cluster_cdf(cfg.cluster_count);
  for (std::size_t c = 0; c < cfg.cluster_count; ++c) {
    const auto& pool = cluster_items[c];
    if (pool.empty()) continue;
    double top = -1e300;
    for (const std::uint32_t i : pool) top = std::max(top, typicality[i]);
    auto& cdf = cluster_cdf[c];
    cdf.reserve(pool.size());
    double total = 0.0;
    for (const std::uint32_t i : pool) {
      total += std::exp(cfg.typicality_sharpness * (typicality[i] - top));
      cdf.push_back(total);
    }
  }
  const auto draw_from_cluster = [&](std::uint32_t c, Rng& rng) {
    const auto& pool = cluster_items[c];
    const auto& cdf = cluster_cdf[c];
    const double r = rng.uniform_real() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf.begin()), pool.size() - 1);
    return pool[idx];
  };

  // Interactions: distinct items per user from the preference mixture.
  for (std::size_t u = 0; u < cfg.user_count; ++u) {
    Rng rng = Rng::substream(cfg.seed, 31, u);
    const std::uint32_t primary = nonempty_clusters[rng.uniform_index(nonempty_clusters.size())];
    const std::uint32_t secondary =
        nonempty_clusters[rng.uniform_index(nonempty_clusters.size())];
    std::vector<bool> chosen(cfg.item_count, false);
    std::size_t taken = 0;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 60 * cfg.interactions_per_user + 200;
    while (taken < cfg.interactions_per_user && attempts < max_attempts) {
      ++attempts;
      const double r = rng.uniform_real();
      std::uint32_t item;
      if (r < cfg.primary_mass) {
        item = draw_from_cluster(primary, rng);
      } else if (r < cfg.primary_mass + cfg.secondary_mass) {
        item = draw_from_cluster(secondary, rng);
      } else {
        item = static_cast<std::uint32_t>(rng.uniform_index(cfg.item_count));
      }
      if (chosen[item]) continue;
      chosen[item] = true;
      ++taken;
    }
    if (taken < cfg.interactions_per_user) {
      // Rejection stalled (tiny pools); fill from the remaining items.
      std::vector<std::uint32_t> remaining;
      for (std::size_t i = 0; i < cfg.item_count; ++i)
        if (!chosen[i]) remaining.push_back(static_cast<std::uint32_t>(i));
      rng.shuffle(remaining);
      for (std::size_t j = 0; taken < cfg.interactions_per_user; ++j, ++taken)
        chosen[remaining[j]] = true;
    }
    for (std::size_t i = 0; i < cfg.item_count; ++i)
      if (chosen[i])
        ds.interactions.emplace_back(static_cast<std::uint32_t>(u),
                                     static_cast<std::uint32_t>(i));
  }

  ds.validate();
  return ds;
}

}  // namespace vimm

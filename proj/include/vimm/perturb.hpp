#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/rng.hpp"

namespace vimm {

// Level presets: L1/L2/L3 noise variances and exchange probabilities.
inline double noise_level_variance(int level) {
  switch (level) {
    case 0: return 0.0;
    case 1: return 1e-6;
    case 2: return 1e-5;
    case 3: return 1e-4;
  }
  throw error("noise level must be in {0,1,2,3}");
}

inline double error_level_probability(int level) {
  switch (level) {
    case 0: return 0.0;
    case 1: return 0.01;
    case 2: return 0.03;
    case 3: return 0.05;
  }
  throw error("error level must be in {0,1,2,3}");
}

namespace detail {
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace detail

// Adds i.i.d. zero-mean Gaussian noise of the given variance to every
// entry; the input is untouched. variance = 0 returns an exact copy.
inline ModalityEmbeddings inject_representation_noise(const ModalityEmbeddings& emb,
                                                      double variance, std::uint64_t seed) {
  require(variance >= 0.0, "inject_representation_noise: variance must be >= 0");
  ModalityEmbeddings out = emb;
  if (variance == 0.0) return out;
  const double stddev = std::sqrt(variance);
  Rng rng = Rng::substream(seed, 51, detail::fnv1a(emb.modality));
  for (float& v : out.values) v = static_cast<float>(static_cast<double>(v) + stddev * rng.normal());
  out.validate();
  return out;
}

// Marks each item independently with the given probability, pairs the
// marked items by a random matching (one dropped if odd) and swaps the
// feature rows of every pair in all modalities. Interactions are kept.
inline Dataset inject_information_error(const Dataset& ds, double exchange_probability,
                                        std::uint64_t seed) {
  require(exchange_probability >= 0.0 && exchange_probability <= 1.0,
          "inject_information_error: probability must be in [0,1]");
  Dataset out = ds;
  if (exchange_probability == 0.0) return out;

  Rng mark_rng = Rng::substream(seed, 61);
  std::vector<std::uint32_t> marked;
  for (std::size_t i = 0; i < ds.item_count; ++i)
    if (mark_rng.uniform_real() < exchange_probability)
      marked.push_back(static_cast<std::uint32_t>(i));

  Rng pair_rng = Rng::substream(seed, 62);
  pair_rng.shuffle(marked);
  if (marked.size() % 2 == 1) marked.pop_back();

  for (std::size_t p = 0; p + 1 < marked.size(); p += 2) {
    const std::uint32_t a = marked[p];
    const std::uint32_t b = marked[p + 1];
    for (auto& [name, emb] : out.modalities) {
      float* ra = emb.row(a);
      float* rb = emb.row(b);
      for (std::size_t d = 0; d < emb.dim; ++d) std::swap(ra[d], rb[d]);
    }
  }
  return out;
}

}  // namespace vimm

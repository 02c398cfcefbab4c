#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vimm/error.hpp"

namespace vimm {

// Frozen per-item feature matrix for one modality. Row i is the feature
// vector of item i; the values come from pre-trained encoders (or the
// synthetic generator) and are never updated.
struct ModalityEmbeddings {
  std::string modality;
  std::size_t dim = 0;
  std::size_t item_count = 0;
  std::vector<float> values;  // row-major, item_count * dim

  const float* row(std::size_t item) const { return values.data() + item * dim; }
  float* row(std::size_t item) { return values.data() + item * dim; }

  void validate() const {
    require(dim > 0, "embeddings '" + modality + "': dim must be positive");
    require(values.size() == item_count * dim,
            "embeddings '" + modality + "': value count does not match item_count*dim");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]))
        throw error("embeddings '" + modality + "': non-finite value at flat index " +
                    std::to_string(i));
    }
  }
};

struct Dataset {
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> interactions;  // (user, item)
  std::map<std::string, ModalityEmbeddings> modalities;

  void validate() const {
    require(user_count > 0, "dataset: user_count must be positive");
    require(item_count > 0, "dataset: item_count must be positive");
    require(!modalities.empty(), "dataset: at least one modality required");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [u, i] : interactions) {
      require(u < user_count, "dataset: user index " + std::to_string(u) + " out of range");
      require(i < item_count, "dataset: item index " + std::to_string(i) + " out of range");
      require(seen.insert({u, i}).second,
              "dataset: duplicate interaction (" + std::to_string(u) + ", " +
                  std::to_string(i) + ")");
    }
    for (const auto& [name, emb] : modalities) {
      require(emb.modality == name, "dataset: modality key/name mismatch for '" + name + "'");
      require(emb.item_count == item_count,
              "dataset: modality '" + name + "' has " + std::to_string(emb.item_count) +
                  " rows, expected " + std::to_string(item_count));
      emb.validate();
    }
  }
};

}  // namespace vimm

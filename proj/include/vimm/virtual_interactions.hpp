#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/parallel.hpp"
#include "vimm/simgraph.hpp"

namespace vimm {

// Virtual interaction matrix: (u, j) = 1 iff some real training
// interaction (u, i) has j among i's top-k neighbors. Duplicate proposals
// collapse; entries may coincide with real interactions.
inline InteractionMatrix build_virtual(const InteractionMatrix& train,
                                       const NeighborTable& table, unsigned workers = 1) {
  require(table.item_count == train.item_count(),
          "build_virtual: neighbor table covers " + std::to_string(table.item_count) +
              " items, train matrix has " + std::to_string(train.item_count()));

  const std::size_t users = train.user_count();
  std::vector<std::vector<std::uint32_t>> rows(users);
  parallel_for(users, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      auto& row = rows[u];
      for (std::size_t e = train.row_begin(static_cast<std::uint32_t>(u));
           e < train.row_end(static_cast<std::uint32_t>(u)); ++e) {
        for (const auto& nb : table.row(train.entry_item(e))) row.push_back(nb.neighbor);
      }
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
  });

  std::vector<InteractionMatrix::Entry> entries;
  for (std::size_t u = 0; u < users; ++u)
    for (std::uint32_t j : rows[u])
      entries.push_back({static_cast<std::uint32_t>(u), j, 1.0});

  const MatrixKind kind = table.source == NeighborSource::synergistic
                              ? MatrixKind::virtual_synergistic
                              : MatrixKind::virtual_modality;
  return InteractionMatrix::from_entries(users, train.item_count(), std::move(entries), kind,
                                         table.modality);
}

// Sanity gate for a constructed virtual matrix: 1 <= |virtual| <= k|train|.
// Throws with the offending counts on violation.
inline bool virtual_size_bounds_check(const InteractionMatrix& train,
                                      const InteractionMatrix& virt, std::size_t k) {
  const std::size_t upper = k * train.nnz();
  if (virt.nnz() < 1 || virt.nnz() > upper)
    throw error("virtual size bounds violated: |virtual|=" + std::to_string(virt.nnz()) +
                ", expected within [1, k*|train|=" + std::to_string(upper) + "]");
  return true;
}

}  // namespace vimm

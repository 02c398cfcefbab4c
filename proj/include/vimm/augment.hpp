#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vimm/error.hpp"
#include "vimm/interaction_matrix.hpp"
#include "vimm/io.hpp"
#include "vimm/parallel.hpp"

namespace vimm {

enum class AugmentStrategy { overlay, synergistic };

inline const char* to_string(AugmentStrategy s) {
  return s == AugmentStrategy::overlay ? "overlay" : "synergistic";
}

// Entrywise clamp to [0,1]. The lower bound never fires on the standard
// path (all addends are nonnegative) but is implemented as written.
inline double confine(double weight) { return std::min(std::max(weight, 0.0), 1.0); }

// Confined weights below this are dropped from storage so float noise
// cannot inflate the nonzero count.
inline constexpr double kAugmentStorageEpsilon = 1e-9;

namespace detail {

inline InteractionMatrix combine_weighted(
    const InteractionMatrix& real,
    const std::vector<std::pair<const InteractionMatrix*, double>>& scaled_virtuals,
    bool apply_confine, unsigned workers) {
  for (const auto& [virt, w] : scaled_virtuals) {
    require(real.same_shape(*virt), "augment: matrix shape mismatch");
    require(w >= 0.0, "augment: negative weight");
  }
  const std::size_t users = real.user_count();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(users);
  parallel_for(users, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<std::uint32_t, double>> acc;
    for (std::size_t uz = begin; uz < end; ++uz) {
      const auto u = static_cast<std::uint32_t>(uz);
      acc.clear();
      for (std::size_t e = real.row_begin(u); e < real.row_end(u); ++e)
        acc.emplace_back(real.entry_item(e), real.entry_weight(e));
      for (const auto& [virt, w] : scaled_virtuals)
        for (std::size_t e = virt->row_begin(u); e < virt->row_end(u); ++e)
          acc.emplace_back(virt->entry_item(e), w * virt->entry_weight(e));
      // stable: per item, contributions stay in append order (real first,
      // then the virtual terms in their given order).
      std::stable_sort(acc.begin(), acc.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      auto& out = rows[uz];
      std::size_t p = 0;
      while (p < acc.size()) {
        const std::uint32_t item = acc[p].first;
        double sum = 0.0;
        while (p < acc.size() && acc[p].first == item) {
          sum += acc[p].second;
          ++p;
        }
        const double w = apply_confine ? confine(sum) : sum;
        if (w >= kAugmentStorageEpsilon) out.emplace_back(item, w);
      }
    }
  });

  std::vector<InteractionMatrix::Entry> entries;
  for (std::size_t u = 0; u < users; ++u)
    for (const auto& [item, w] : rows[u])
      entries.push_back({static_cast<std::uint32_t>(u), item, w});
  return InteractionMatrix::from_entries(users, real.item_count(), std::move(entries),
                                         MatrixKind::augmented);
}

}  // namespace detail

// R̄ = Confine(R + λ Σ_m w^m R^m). Overlapping modality proposals
// accumulate before the clamp.
inline InteractionMatrix overlay_augment(const InteractionMatrix& real,
                                         const std::map<std::string, InteractionMatrix>& virtuals,
                                         const std::map<std::string, double>& weights,
                                         double lambda, bool apply_confine = true,
                                         unsigned workers = 1) {
  require(lambda >= 0.0, "overlay_augment: lambda must be >= 0");
  std::vector<std::pair<const InteractionMatrix*, double>> scaled;
  for (const auto& [name, virt] : virtuals) {
    const auto it = weights.find(name);
    require(it != weights.end(), "overlay_augment: missing weight for modality '" + name + "'");
    scaled.emplace_back(&virt, lambda * it->second);
  }
  return detail::combine_weighted(real, scaled, apply_confine, workers);
}

// R̄ = Confine(R + λ w^s R^s).
inline InteractionMatrix synergistic_augment(const InteractionMatrix& real,
                                             const InteractionMatrix& virtual_synergistic,
                                             double weight_synergistic, double lambda,
                                             bool apply_confine = true, unsigned workers = 1) {
  require(lambda >= 0.0, "synergistic_augment: lambda must be >= 0");
  std::vector<std::pair<const InteractionMatrix*, double>> scaled{
      {&virtual_synergistic, lambda * weight_synergistic}};
  return detail::combine_weighted(real, scaled, apply_confine, workers);
}

// --- Persistence: magic "VIMMAUG1", kind byte, u32 U, u32 I, u64 nnz,
// then (u32 user, u32 item, f32 weight) records sorted by (user, item).
// Weights are rounded to 32-bit at this boundary.

inline constexpr char kAugmentedMagic[] = "VIMMAUG1";

inline void save_augmented(const InteractionMatrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  os.write(kAugmentedMagic, 8);
  const std::uint8_t kind = static_cast<std::uint8_t>(m.kind());
  os.write(reinterpret_cast<const char*>(&kind), 1);
  detail::write_u32_le(os, static_cast<std::uint32_t>(m.user_count()));
  detail::write_u32_le(os, static_cast<std::uint32_t>(m.item_count()));
  detail::write_u64_le(os, m.nnz());
  for (std::uint32_t u = 0; u < m.user_count(); ++u) {
    for (std::size_t e = m.row_begin(u); e < m.row_end(u); ++e) {
      detail::write_u32_le(os, u);
      detail::write_u32_le(os, m.entry_item(e));
      detail::write_f32_le(os, static_cast<float>(m.entry_weight(e)));
    }
  }
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

inline InteractionMatrix load_augmented(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path.string());
  const std::string where = path.string();
  char magic[8];
  require(static_cast<bool>(is.read(magic, 8)) && std::memcmp(magic, kAugmentedMagic, 8) == 0,
          where + ": bad magic, expected " + std::string(kAugmentedMagic));
  std::uint8_t kind_tag = 0;
  require(static_cast<bool>(is.read(reinterpret_cast<char*>(&kind_tag), 1)),
          where + ": truncated header");
  require(kind_tag <= 3, where + ": unknown kind tag " + std::to_string(kind_tag));
  std::uint32_t users = 0, items = 0;
  std::uint64_t nnz = 0;
  require(detail::read_u32_le(is, users) && detail::read_u32_le(is, items) &&
              detail::read_u64_le(is, nnz),
          where + ": truncated header");
  require(users > 0 && items > 0, where + ": zero dimension in header");

  std::vector<InteractionMatrix::Entry> entries;
  entries.reserve(nnz);
  std::uint64_t prev = 0;
  for (std::uint64_t r = 0; r < nnz; ++r) {
    std::uint32_t u = 0, i = 0;
    float w = 0.0f;
    require(detail::read_u32_le(is, u) && detail::read_u32_le(is, i) &&
                detail::read_f32_le(is, w),
            where + ": truncated at record " + std::to_string(r) + " of " + std::to_string(nnz));
    require(u < users && i < items, where + ": index out of range at record " + std::to_string(r));
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | i;
    require(r == 0 || key > prev, where + ": records not sorted by (user, item) at record " +
                                      std::to_string(r));
    prev = key;
    require(std::isfinite(w), where + ": non-finite weight at record " + std::to_string(r));
    entries.push_back({u, i, static_cast<double>(w)});
  }
  char extra;
  require(!is.read(&extra, 1), where + ": trailing bytes after records");
  return InteractionMatrix::from_entries(users, items, std::move(entries),
                                         static_cast<MatrixKind>(kind_tag));
}

}  // namespace vimm

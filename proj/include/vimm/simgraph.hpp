#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vimm/dataset.hpp"
#include "vimm/error.hpp"
#include "vimm/parallel.hpp"

namespace vimm {

// Cosine of two equal-length vectors; 0 when either norm is 0 so that
// degenerate rows never rank as similar.
inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), "cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double x = a[d];
    const double y = b[d];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

enum class NeighborSource : std::uint8_t { modality = 0, synergistic = 1 };

// Per-item top-k neighbor lists under one similarity source. Each item
// holds exactly min(k, |I|-1) entries sorted by score descending, ties
// broken by ascending neighbor index; the item itself never appears.
struct NeighborTable {
  struct Entry {
    std::uint32_t neighbor;
    double score;
    bool operator==(const Entry&) const = default;
  };

  NeighborSource source = NeighborSource::modality;
  std::string modality;  // empty for synergistic tables
  std::size_t k = 0;
  std::size_t item_count = 0;
  std::size_t stride = 0;  // = min(k, item_count - 1)
  std::vector<Entry> entries;  // item_count * stride

  std::span<const Entry> row(std::size_t item) const {
    return {entries.data() + item * stride, stride};
  }

  bool operator==(const NeighborTable& other) const {
    return source == other.source && modality == other.modality && k == other.k &&
           item_count == other.item_count && stride == other.stride && entries == other.entries;
  }
};

namespace detail {

// Candidate order: higher score first, then lower index. Total, so the
// selected set is unique however candidates are streamed.
inline bool neighbor_better(double score, std::uint32_t idx, const NeighborTable::Entry& e) {
  return score > e.score || (score == e.score && idx < e.neighbor);
}

// Fixed-size descending insertion buffer.
class TopKBuffer {
 public:
  explicit TopKBuffer(std::size_t capacity) : capacity_(capacity) { buf_.reserve(capacity); }

  void offer(std::uint32_t idx, double score) {
    if (buf_.size() == capacity_) {
      if (!neighbor_better(score, idx, buf_.back())) return;
      buf_.pop_back();
    }
    NeighborTable::Entry e{idx, score};
    auto pos = std::upper_bound(buf_.begin(), buf_.end(), e,
                                [](const NeighborTable::Entry& a, const NeighborTable::Entry& b) {
                                  return a.score > b.score ||
                                         (a.score == b.score && a.neighbor < b.neighbor);
                                });
    buf_.insert(pos, e);
  }

  const std::vector<NeighborTable::Entry>& sorted() const { return buf_; }

 private:
  std::size_t capacity_;
  std::vector<NeighborTable::Entry> buf_;
};

inline std::vector<double> row_norms(const ModalityEmbeddings& emb) {
  std::vector<double> norms(emb.item_count);
  for (std::size_t i = 0; i < emb.item_count; ++i) {
    const float* row = emb.row(i);
    double sq = 0.0;
    for (std::size_t d = 0; d < emb.dim; ++d) sq += static_cast<double>(row[d]) * row[d];
    norms[i] = std::sqrt(sq);
  }
  return norms;
}

inline double pair_cosine(const ModalityEmbeddings& emb, const std::vector<double>& norms,
                          std::size_t i, std::size_t j) {
  if (norms[i] == 0.0 || norms[j] == 0.0) return 0.0;
  const float* a = emb.row(i);
  const float* b = emb.row(j);
  double dot = 0.0;
  for (std::size_t d = 0; d < emb.dim; ++d) dot += static_cast<double>(a[d]) * b[d];
  return dot / (norms[i] * norms[j]);
}

struct SynergisticView {
  std::vector<const ModalityEmbeddings*> mods;
  std::vector<std::vector<double>> norms;

  explicit SynergisticView(const std::map<std::string, ModalityEmbeddings>& modalities) {
    require(!modalities.empty(), "topk_synergistic: no modalities");
    std::size_t items = modalities.begin()->second.item_count;
    for (const auto& [name, emb] : modalities) {
      require(emb.item_count == items, "topk_synergistic: modality '" + name +
                                           "' item count mismatch");
      mods.push_back(&emb);
      norms.push_back(row_norms(emb));
    }
  }

  std::size_t item_count() const { return mods.front()->item_count; }

  // Sum of per-modality cosines, accumulated in name order.
  double score(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t m = 0; m < mods.size(); ++m) s += pair_cosine(*mods[m], norms[m], i, j);
    return s;
  }
};

template <typename ScoreFn>
NeighborTable topk_blocked(std::size_t item_count, std::size_t k, ScoreFn&& score,
                           unsigned workers, std::size_t block_size) {
  require(k >= 1, "top-k: k must be >= 1");
  require(item_count >= 2, "top-k: need at least two items");
  NeighborTable table;
  table.k = k;
  table.item_count = item_count;
  table.stride = std::min(k, item_count - 1);
  table.entries.resize(item_count * table.stride);
  const std::size_t block = std::max<std::size_t>(1, block_size);
  parallel_for(item_count, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      TopKBuffer buf(table.stride);
      for (std::size_t b0 = 0; b0 < item_count; b0 += block) {
        const std::size_t b1 = std::min(item_count, b0 + block);
        for (std::size_t j = b0; j < b1; ++j) {
          if (j == i) continue;
          buf.offer(static_cast<std::uint32_t>(j), score(i, j));
        }
      }
      std::copy(buf.sorted().begin(), buf.sorted().end(),
                table.entries.begin() + static_cast<std::ptrdiff_t>(i * table.stride));
    }
  });
  return table;
}

template <typename ScoreFn>
NeighborTable topk_bruteforce(std::size_t item_count, std::size_t k, ScoreFn&& score) {
  require(k >= 1, "top-k: k must be >= 1");
  require(item_count >= 2, "top-k: need at least two items");
  NeighborTable table;
  table.k = k;
  table.item_count = item_count;
  table.stride = std::min(k, item_count - 1);
  table.entries.reserve(item_count * table.stride);
  std::vector<NeighborTable::Entry> row;
  for (std::size_t i = 0; i < item_count; ++i) {
    row.clear();
    for (std::size_t j = 0; j < item_count; ++j) {
      if (j == i) continue;
      row.push_back({static_cast<std::uint32_t>(j), score(i, j)});
    }
    std::sort(row.begin(), row.end(),
              [](const NeighborTable::Entry& a, const NeighborTable::Entry& b) {
                return a.score > b.score || (a.score == b.score && a.neighbor < b.neighbor);
              });
    table.entries.insert(table.entries.end(), row.begin(), row.begin() +
                         static_cast<std::ptrdiff_t>(table.stride));
  }
  return table;
}

}  // namespace detail

inline constexpr std::size_t kDefaultSimBlock = 128;

inline NeighborTable topk_modality(const ModalityEmbeddings& emb, std::size_t k,
                                   unsigned workers = 1,
                                   std::size_t block_size = kDefaultSimBlock) {
  const auto norms = detail::row_norms(emb);
  NeighborTable t = detail::topk_blocked(
      emb.item_count, k,
      [&](std::size_t i, std::size_t j) { return detail::pair_cosine(emb, norms, i, j); },
      workers, block_size);
  t.source = NeighborSource::modality;
  t.modality = emb.modality;
  return t;
}

// O(|I|^2 d) reference with a full per-row sort; kept as the exactness
// check for the blocked path.
inline NeighborTable topk_modality_bruteforce(const ModalityEmbeddings& emb, std::size_t k) {
  const auto norms = detail::row_norms(emb);
  NeighborTable t = detail::topk_bruteforce(emb.item_count, k, [&](std::size_t i, std::size_t j) {
    return detail::pair_cosine(emb, norms, i, j);
  });
  t.source = NeighborSource::modality;
  t.modality = emb.modality;
  return t;
}

inline NeighborTable topk_synergistic(const std::map<std::string, ModalityEmbeddings>& modalities,
                                      std::size_t k, unsigned workers = 1,
                                      std::size_t block_size = kDefaultSimBlock) {
  detail::SynergisticView view(modalities);
  NeighborTable t = detail::topk_blocked(
      view.item_count(), k, [&](std::size_t i, std::size_t j) { return view.score(i, j); },
      workers, block_size);
  t.source = NeighborSource::synergistic;
  return t;
}

inline NeighborTable topk_synergistic_bruteforce(
    const std::map<std::string, ModalityEmbeddings>& modalities, std::size_t k) {
  detail::SynergisticView view(modalities);
  NeighborTable t = detail::topk_bruteforce(
      view.item_count(), k, [&](std::size_t i, std::size_t j) { return view.score(i, j); });
  t.source = NeighborSource::synergistic;
  return t;
}

// Text dump, one line per (item, rank): item, rank, neighbor, score with
// 9 significant digits.
inline void save_neighbor_table(const std::filesystem::path& path, const NeighborTable& table) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open for writing: " + path.string());
  char line[96];
  for (std::size_t i = 0; i < table.item_count; ++i) {
    const auto row = table.row(i);
    for (std::size_t r = 0; r < row.size(); ++r) {
      std::snprintf(line, sizeof(line), "%zu\t%zu\t%u\t%.9g\n", i, r, row[r].neighbor,
                    row[r].score);
      os << line;
    }
  }
  os.flush();
  require(os.good(), "write failed: " + path.string());
}

// Reads a dump back. Scores go through text so they are only accurate to
// 9 significant digits; the neighbor sets themselves are exact. k is
// recovered as the stride.
inline NeighborTable load_neighbor_table(const std::filesystem::path& path,
                                         NeighborSource source, std::string modality = "") {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open: " + path.string());
  NeighborTable t;
  t.source = source;
  t.modality = std::move(modality);
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_item = 0;
  std::vector<std::pair<std::uint64_t, NeighborTable::Entry>> rows;  // (item*2^32+rank, entry)
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string at = path.string() + ":" + std::to_string(lineno);
    unsigned long long item = 0, rank = 0, neighbor = 0;
    double score = 0.0;
    char tail = 0;
    const int got =
        std::sscanf(line.c_str(), "%llu\t%llu\t%llu\t%lf%c", &item, &rank, &neighbor, &score, &tail);
    require(got == 4, at + ": expected '<item>\\t<rank>\\t<neighbor>\\t<score>'");
    rows.push_back({(static_cast<std::uint64_t>(item) << 32) | rank,
                    {static_cast<std::uint32_t>(neighbor), score}});
    max_item = std::max<std::size_t>(max_item, item);
  }
  require(!rows.empty(), path.string() + ": empty neighbor table");
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  t.item_count = max_item + 1;
  require(rows.size() % t.item_count == 0, path.string() + ": ragged neighbor table");
  t.stride = rows.size() / t.item_count;
  t.k = t.stride;
  t.entries.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint64_t expect = ((r / t.stride) << 32) | (r % t.stride);
    require(rows[r].first == expect, path.string() + ": missing or duplicate (item, rank) line");
    t.entries.push_back(rows[r].second);
  }
  return t;
}

}  // namespace vimm
